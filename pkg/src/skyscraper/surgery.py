"""Return-time surgery: enlarging a tower base to hit prescribed return-time masses.

One step at height ``n`` marks new base levels ``n, 2n, ..., q*n`` inside
tall towers (``q = (k - n - 1) // n``), consuming towers in ascending height
from ``K*n + n + 1`` and cutting the last one from the left, until the mass
at height ``n`` equals its target.  Marked towers split into ``q`` chunks of
height ``n`` and one top chunk of height ``k - q*n`` in ``{n+1, ..., 2n}``.

A tower of height ``k`` can only be processed by steps ``n <= (k - 1) // 2``
and chunks are never cut again, so every origin coordinate has a final chunk
once finitely many steps have run.  :class:`SurgeredPresentation` forces steps
lazily and memoizes them.
"""
from __future__ import annotations

import threading
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

from .distribution import DistributionError, HeightDistribution, TargetSequence
from .dynamics import BudgetExceeded, ConservativePart, ConservativePoint, ModelError, shrink_base, Transformation
from .exact import ExactNum, as_exact

__all__ = [
    "Chunk",
    "ClassBlock",
    "InsufficientMass",
    "SurgeryError",
    "SurgeredPresentation",
    "SurgeryStep",
    "expand_at",
    "expand_to",
    "match_distributions",
]

ZERO = ExactNum(0)
SEARCH_LIMIT = 1_000_000


class SurgeryError(ValueError):
    pass


class InsufficientMass(SurgeryError):
    """No tall enough towers remain to supply the requested mass."""


@dataclass(frozen=True)
class TowerCut:
    k: int          # origin tower height
    q: int          # number of height-n chunks
    u_lo: ExactNum  # cut segment inside the tower slot, [u_lo, u_hi)
    u_hi: ExactNum

    @property
    def width(self) -> ExactNum:
        return self.u_hi - self.u_lo


@dataclass(frozen=True)
class SurgeryStep:
    n: int
    lambda_n: ExactNum
    delta: ExactNum
    K: int
    m: int
    D_width: ExactNum
    added_mass: ExactNum
    cuts: tuple  # of TowerCut, ascending k

    @property
    def processed_range(self) -> tuple[int, int]:
        return self.K * self.n + self.n + 1, self.m

    @property
    def per_tower_cuts(self):
        return tuple((c.k, c.q, c.width) for c in self.cuts)

    def to_json(self) -> dict:
        lo, hi = self.processed_range
        return {
            "n": self.n,
            "lambda_n": str(self.lambda_n),
            "delta": str(self.delta),
            "K": self.K,
            "m": self.m,
            "processed_range": [lo, hi],
            "D_width": str(self.D_width),
            "added_mass": str(self.added_mass),
            "per_tower_cuts": [[k, q, str(w)] for k, q, w in self.per_tower_cuts],
        }


@dataclass(frozen=True)
class Chunk:
    """Final position of an origin point: chunk height, chunk start level, level inside."""

    height: int
    start: int
    sublevel: int


@dataclass(frozen=True)
class ClassBlock:
    """``count`` chunks of one height inside origin tower ``k``: levels ``first + i*stride``."""

    k: int
    u_lo: ExactNum
    u_hi: ExactNum
    first: int
    count: int
    stride: int

    @property
    def width(self) -> ExactNum:
        return (self.u_hi - self.u_lo) * self.count


class SurgeredPresentation:
    """An origin skyscraper with a growing base ``B = B0 + C_1 + C_2 + ...``.

    Coordinates are always those of ``origin``; the current base is implicit
    in the recorded cuts.
    """

    def __init__(self, origin: ConservativePart, targets: Optional[TargetSequence] = None, budget: Optional[int] = None):
        self.origin = origin
        self.targets = targets
        self.budget = budget
        self.steps: list[SurgeryStep] = []
        self.distribution: HeightDistribution = origin.heights
        self._cuts: dict[int, list] = {}    # k -> [(u_lo, u_hi, n)], contiguous from 0
        self._lock = threading.RLock()
        self._classes: dict[int, tuple] = {}

    # -- bookkeeping -----------------------------------------------------
    def copy(self) -> "SurgeredPresentation":
        new = SurgeredPresentation(self.origin, self.targets, self.budget)
        new.steps = list(self.steps)
        new.distribution = self.distribution
        new._cuts = {k: list(v) for k, v in self._cuts.items()}
        return new

    @property
    def forced_through(self) -> int:
        return self.steps[-1].n if self.steps else 0

    @property
    def forced_steps(self) -> tuple:
        return tuple(self.steps)

    def base_measure(self) -> ExactNum:
        return self.distribution.total_width()

    def limit_base_measure(self) -> ExactNum:
        """Measure of the base in the limit of all steps: the sum of the targets."""
        if self.targets is None:
            raise SurgeryError("no target sequence attached")
        return self.targets.total()

    def _cut_front(self, k: int) -> ExactNum:
        segs = self._cuts.get(k)
        return segs[-1][1] if segs else ZERO

    # -- one step ----------------------------------------------------------
    def _step(self, n: int, lambda_n: ExactNum, bound) -> SurgeryStep:
        if self.steps and n <= self.steps[-1].n:
            raise SurgeryError(f"step {n} already forced or out of order")
        dist = self.distribution
        w_n = dist.width(n)
        need = lambda_n - w_n
        if not need > 0:
            raise SurgeryError(f"target {lambda_n} at height {n} does not exceed current mass {w_n}")
        delta = None
        for k in range(n + 1, 2 * n + 1):
            gap = bound(k) - dist.width(k)
            if delta is None or gap < delta:
                delta = gap
        if not delta > 0:
            raise SurgeryError(f"future bounds do not strictly dominate heights {n + 1}..{2 * n}")
        K = (need / delta).floor() + 1
        start = K * n + n + 1
        acc = ZERO
        cuts = []
        m = None
        D = ZERO
        for count, k in enumerate(dist.heights_from(start)):
            if count > SEARCH_LIMIT:
                raise BudgetExceeded("m-search did not terminate")
            q = (k - n - 1) // n
            w = dist.width(k)
            front = self._cut_front(k)
            if w != self.origin.heights.width(k) - front:
                raise SurgeryError(f"height {k} is not an untouched origin remainder")
            if acc + w * q >= need:
                m = k
                D = (need - acc) / q
                cuts.append(TowerCut(k, q, front, front + D))
                break
            acc = acc + w * q
            cuts.append(TowerCut(k, q, front, front + w))
        if m is None:
            raise InsufficientMass(f"total mass exhausted before reaching {need} at height {n}")

        explicit = dict(dist.materialized(m).explicit)
        tail = dist.materialized(m).tail

        def add(h, w):
            v = explicit.get(h, ZERO) + w
            if v:
                explicit[h] = v
            else:
                explicit.pop(h, None)

        for cut in cuts:
            add(cut.k, -cut.width)
            add(n, cut.width * cut.q)
            add(cut.k - cut.q * n, cut.width)
            self._cuts.setdefault(cut.k, []).append((cut.u_lo, cut.u_hi, n))
        self.distribution = HeightDistribution(explicit, tail)
        step = SurgeryStep(n, lambda_n, delta, K, m, D, need, tuple(cuts))
        self.steps.append(step)
        self._classes.clear()
        return step

    # -- lazy forcing ------------------------------------------------------
    def force(self, n: int) -> None:
        """Run target-driven steps until step ``n`` has been forced."""
        if self.targets is None:
            raise SurgeryError("no target sequence attached")
        with self._lock:
            while self.forced_through < n:
                nxt = self.forced_through + 1
                if self.budget is not None and nxt > self.budget:
                    raise BudgetExceeded(f"forcing step {nxt} exceeds the budget of {self.budget} steps")
                if self.targets(nxt) == self.distribution.width(nxt):
                    raise SurgeryError(f"target already met at {nxt}; targets must dominate strictly")
                self._step(nxt, self.targets(nxt), self.targets)

    def _in_cut(self, k: int, u) -> bool:
        with self._lock:
            return any(lo <= u < hi for lo, hi, _ in self._cuts.get(k, ()))

    def resolve(self, p: ConservativePoint) -> Chunk:
        """Final chunk of an origin point (forcing as many steps as that requires)."""
        k = p.height
        u = self.origin.offset_in_tower(p)
        # cut segments are final, so only points in the uncut remainder need forcing
        if self.targets is not None and not self._in_cut(k, u):
            self.force((k - 1) // 2)
        with self._lock:
            segs = self._cuts.get(k, ())
            for lo, hi, n in segs:
                if lo <= u < hi:
                    q = (k - n - 1) // n
                    c = min(p.level // n, q)
                    start = c * n
                    h = n if c < q else k - q * n
                    return Chunk(h, start, p.level - start)
        return Chunk(k, 0, p.level)

    def class_blocks(self, h: int) -> tuple:
        """``(blocks, starts)``: all chunks of final height ``h`` in canonical order, with packed offsets."""
        if self.targets is not None:
            self.force(h)
        with self._lock:
            cached = self._classes.get(h)
            if cached is not None:
                return cached
            blocks = []
            for step in self.steps:
                n = step.n
                for cut in step.cuts:
                    if n == h:
                        blocks.append(ClassBlock(cut.k, cut.u_lo, cut.u_hi, 0, cut.q, n))
                    if cut.k - cut.q * n == h:
                        blocks.append(ClassBlock(cut.k, cut.u_lo, cut.u_hi, cut.q * n, 1, 1))
            w = self.origin.heights.width(h)
            front = self._cut_front(h)
            if w and front < w:
                blocks.append(ClassBlock(h, front, w, 0, 1, 1))
            blocks = tuple(blocks)
            self._classes[h] = (blocks, _cumulative(blocks))
            return self._classes[h]

    def class_position(self, p: ConservativePoint, chunk: Chunk) -> ExactNum:
        """Position of ``p``'s chunk base inside the packed class of its height."""
        blocks, cum = self.class_blocks(chunk.height)
        u = self.origin.offset_in_tower(p)
        for i, b in enumerate(blocks):
            if b.k == p.height and b.u_lo <= u < b.u_hi:
                idx = (chunk.start - b.first) // b.stride
                if 0 <= idx < b.count and b.first + idx * b.stride == chunk.start:
                    return cum[i] + (b.u_hi - b.u_lo) * idx + (u - b.u_lo)
        raise SurgeryError("chunk not found in its height class")

    def point_at(self, h: int, position: ExactNum, sublevel: int) -> ConservativePoint:
        """Origin point at ``sublevel`` above the class-``h`` base position ``position``."""
        blocks, cum = self.class_blocks(h)
        i = bisect_right(cum, position) - 1
        if i < 0 or i >= len(blocks):
            raise SurgeryError("position outside the height class")
        b = blocks[i]
        rel = position - cum[i]
        piece = b.u_hi - b.u_lo
        idx = (rel / piece).floor()
        u = b.u_lo + (rel - piece * idx)
        level = b.first + idx * b.stride + sublevel
        return ConservativePoint(b.k, level, self.origin.base_point(b.k, u))

    def is_base_point(self, p: ConservativePoint) -> bool:
        return self.resolve(p).sublevel == 0

    def to_json(self) -> dict:
        return {
            "forced_through": self.forced_through,
            "base_measure": str(self.base_measure()),
            "steps": [s.to_json() for s in self.steps],
        }


def _cumulative(blocks) -> list:
    cum = [ZERO]
    for b in blocks:
        cum.append(cum[-1] + b.width)
    return cum[:-1] if blocks else []


def expand_at(p: SurgeredPresentation, n: int, lambda_n, future_bounds) -> tuple[SurgeryStep, SurgeredPresentation]:
    """One return-time expansion at height ``n``; the input presentation is left untouched.

    ``future_bounds`` is any callable ``k -> bound`` (e.g. a :class:`TargetSequence`).
    """
    new = p.copy()
    new.targets = None
    step = new._step(n, as_exact(lambda_n), future_bounds)
    return step, new


def expand_to(c: ConservativePart, targets: TargetSequence, force_through: int, budget: Optional[int] = None) -> SurgeredPresentation:
    """Lazy iterated expansion toward ``targets`` with steps ``1..force_through`` forced now."""
    try:
        targets.check_dominates(c.heights)
    except DistributionError as exc:
        raise SurgeryError(str(exc)) from exc
    if budget is not None and force_through > budget:
        raise BudgetExceeded("force_through exceeds the step budget")
    pres = SurgeredPresentation(c, targets, budget)
    pres.force(force_through)
    return pres


def match_distributions(T1: Transformation, T2: Transformation, eps, force_through: int, budget: Optional[int] = None, iteration_budget: int = 100_000):
    """Common return-time distribution on bases of equal measure below ``eps``.

    Both bases are first shrunk below ``eps/2``; the shared targets are
    ``w1(n) + w2(n) + s * 2**-n`` with ``s`` half the remaining room.
    """
    eps = as_exact(eps)
    if not eps > 0:
        raise SurgeryError("epsilon must be positive")
    parts = []
    for T in (T1, T2):
        c = T.conservative if isinstance(T, Transformation) else T
        if c is None or not c.aperiodic:
            raise SurgeryError("both inputs need an aperiodic conservative part")
        parts.append(shrink_base(c, eps / 2, iteration_budget))
    s1, s2 = parts
    room = eps - s1.base_measure - s2.base_measure
    targets = TargetSequence((s1.heights, s2.heights), room / 2)
    P1 = expand_to(s1, targets, force_through, budget)
    P2 = expand_to(s2, targets, force_through, budget)
    return P1, P2, targets
