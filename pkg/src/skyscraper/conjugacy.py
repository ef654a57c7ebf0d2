"""Approximate conjugacies between models, with exact disagreement certificates.

Everything here returns a :class:`CertifiedMap`: a pointwise evaluable
measure-preserving bijection ``S`` together with an exact upper bound on the
measure of the set where ``S T1 S^-1`` and ``T2`` differ.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .dynamics import (
    BudgetExceeded,
    ConservativePart,
    ConservativePoint,
    DissipativePart,
    DissipativePoint,
    ModelError,
    Transformation,
    from_root,
    hopf,
    shrink_base,
    to_root,
)
from .exact import INFINITY, ExactNum, as_exact
from .geometry import IntervalSet, PiecewiseTranslation, disagreement
from .pieces import pieces_from_root, shift_piece
from .rokhlin import MuWeights, RokhlinSet, Trim, mu_measure, rokhlin_set
from .surgery import match_distributions

__all__ = [
    "AbsorbedTransformation",
    "Certificate",
    "CertifiedMap",
    "Classification",
    "ConjugacyError",
    "DomainVerdict",
    "MuWeights",
    "Patch",
    "PatchedTransformation",
    "PerturbationRecord",
    "RokhlinSet",
    "absorb",
    "classify",
    "fundamental_domain_check",
    "lambda_approx_conjugacy",
    "mu_approx_conjugacy",
    "mu_measure",
    "perturbation_bound_check",
    "rokhlin_set",
]

ZERO = ExactNum(0)
ONE = ExactNum(1)


class ConjugacyError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    claimed_eps: Optional[ExactNum]
    bound: ExactNum
    exact: bool
    measure: str = "lambda"
    provenance: tuple = ()

    def to_json(self) -> dict:
        return {
            "claimed_epsilon": str(self.claimed_eps) if self.claimed_eps is not None else None,
            "bound": str(self.bound),
            "bound_is_exact": self.exact,
            "measure": self.measure,
            "provenance": list(self.provenance),
        }


class CertifiedMap:
    """``S`` from the model of ``source`` to the model of ``target``.

    ``exception(x)`` says whether a source point lies in the region that the
    certificate budgets for; outside it ``S(T1(x)) == T2(S(x))`` holds exactly.
    """

    def __init__(self, kind: str, certificate: Certificate, forward: Callable, source, target,
                 exception: Optional[Callable] = None, data: Optional[dict] = None, parts: tuple = ()):
        self.kind = kind
        self.certificate = certificate
        self._forward = forward
        self.source = source
        self.target = target
        self._exception = exception
        self.data = data or {}
        self.parts = parts
        self.sampler: Optional[Callable] = None

    def __call__(self, p):
        return self._forward(p)

    def in_exception(self, p) -> bool:
        return bool(self._exception(p)) if self._exception is not None else False

    def relation_holds(self, p) -> bool:
        return self(self.source.apply(p)) == self.target.apply(self(p))

    def verify(self, samples: int, seed: int = 0, max_height: Optional[int] = None, step_budget: int = 200):
        """Sampled check that failures of the relation only occur in the exception region.

        Presentations built lazily are forced at most ``step_budget`` steps
        during the check; samples needing more are counted as unresolved.
        """
        rng = random.Random(seed)
        report = {"samples": samples, "relation_failures": 0, "unexpected_failures": 0,
                  "exception_points": 0, "exception_holding": 0, "unresolved": 0}
        presentations = getattr(self, "presentations", ())
        saved = [P.budget for P in presentations]
        for P in presentations:
            P.budget = max(P.forced_through, step_budget) if P.budget is None else P.budget
        try:
            for _ in range(samples):
                p = self.sampler(rng) if self.sampler is not None else sample_point(self.source, rng, max_height)
                try:
                    exc = self.in_exception(p)
                    ok = self.relation_holds(p)
                except BudgetExceeded:
                    report["unresolved"] += 1
                    continue
                report["exception_points"] += exc
                if not ok:
                    report["relation_failures"] += 1
                    if not exc:
                        report["unexpected_failures"] += 1
                elif exc:
                    report["exception_holding"] += 1
        finally:
            for P, b in zip(presentations, saved):
                P.budget = b
        report["passed"] = report["unexpected_failures"] == 0
        return report

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "certificate": self.certificate.to_json(),
            "data": self.data,
            "parts": [p.to_json() for p in self.parts],
        }


def sample_point(T, rng: random.Random, max_height: Optional[int] = None, denominator: int = 1 << 16):
    """A point of the model with rational coordinates (shift points within a few cells of 0)."""
    dis = T.dissipative
    cons = T.conservative
    labels = dis.labels(limit=3)
    if cons is not None and (not labels or rng.random() < 0.5):
        return cons.sample_point(rng, max_height, denominator)
    label = rng.choice(labels)
    d = dis.width(label)
    return DissipativePoint(label, d * ExactNum(rng.randrange(-8 * denominator, 8 * denominator)) / denominator)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    possible: bool
    d1: object
    d2: object

    @property
    def d(self):
        return self.d1 if self.possible else None

    def __str__(self):
        if self.possible:
            return f"conjugacy possible: d={self.d1}"
        return f"impossible: d1={self.d1}, d2={self.d2}"

    def to_json(self) -> dict:
        return {"possible": self.possible, "d1": str(self.d1), "d2": str(self.d2)}


def classify(T1: Transformation, T2: Transformation) -> Classification:
    """Approximate conjugacy is possible exactly when the fundamental-domain measures agree."""
    d1, d2 = hopf(T1)[0], hopf(T2)[0]
    return Classification(d1 == d2, d1, d2)


# ---------------------------------------------------------------------------
# dissipative models: fundamental coordinates


class _ShiftCoordinates:
    """Fundamental-domain coordinates of a plain shift part: ``x = y + k*d``."""

    def __init__(self, dis: DissipativePart):
        self.dis = dis

    def coords(self, p: DissipativePoint):
        d = self.dis.width(p.label)
        k = (p.x / d).floor()
        return p.label, p.x - d * k, k

    def point(self, label, y, k):
        return DissipativePoint(label, y + self.dis.width(label) * k)


class _DomainLine:
    """The fundamental domain ``[0, d_c)`` of every component packed in label order."""

    def __init__(self, dis: DissipativePart):
        self.dis = dis
        self.labels = [label for label, _ in dis.components]
        self.starts = []
        acc = ZERO
        for _, w in dis.components:
            self.starts.append(acc)
            acc = acc + w
        self.finite_total = acc
        self.tail = dis.infinite_tail

    def total(self):
        return INFINITY if self.tail is not None else self.finite_total

    def position(self, label, y) -> ExactNum:
        if label.startswith("tail:"):
            return self.finite_total + self.tail * int(label[5:]) + y
        return self.starts[self.labels.index(label)] + y

    def locate(self, t):
        """``(label, offset)`` at line position ``t``."""
        if t < self.finite_total:
            lo, hi = 0, len(self.starts) - 1
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if self.starts[mid] <= t:
                    lo = mid
                else:
                    hi = mid - 1
            return self.labels[lo], t - self.starts[lo]
        if self.tail is None:
            raise ModelError("position beyond the fundamental domain")
        rest = t - self.finite_total
        k = (rest / self.tail).floor()
        return f"tail:{k}", rest - self.tail * k

    def leftmost(self, width):
        """Pieces ``(label, lo, hi)`` of the leftmost ``width`` of the line."""
        if self.total() != INFINITY and width > self.finite_total:
            raise ModelError("fundamental domain too small")
        out = []
        t = ZERO
        width = as_exact(width)
        while t < width:
            label, y = self.locate(t)
            d = self.dis.width(label)
            take = d - y if t + (d - y) <= width else width - t
            out.append((label, y, y + take))
            t = t + take
        return out


# ---------------------------------------------------------------------------
# dissipative absorption


class AbsorbedTransformation:
    """``T`` rerouted so that its conservative part becomes dissipative.

    A piece ``A`` of the fundamental domain (measure ``lambda(B)``) is sent
    onto the base ``B`` of a small skyscraper presentation, and the tower tops
    are sent onto ``T(A) = A + d``.  Elsewhere the map equals ``T``.  With
    ``t`` the packed position in ``A``, the point of ``A`` at ``t`` reaches
    ``A + d`` after ``h + 1`` steps where ``h`` is the height over ``t``.
    """

    def __init__(self, T: Transformation, part: ConservativePart, a_pieces):
        self.T = T
        self.part = part
        self.dissipative = T.dissipative
        self.conservative = T.conservative
        self.a_pieces = tuple(a_pieces)
        self._a_starts = []
        acc = ZERO
        for _, lo, hi in self.a_pieces:
            self._a_starts.append(acc)
            acc = acc + (hi - lo)
        self.beta = acc
        if acc != part.base_measure:
            raise ModelError("A and B must have the same measure")
        self.coordinates = self

    aperiodic = True

    @property
    def disagreement(self) -> ExactNum:
        return self.beta * 2

    # -- A line --------------------------------------------------------------
    def a_pos(self, label, x):
        for (lab, lo, hi), s in zip(self.a_pieces, self._a_starts):
            if lab == label and lo <= x < hi:
                return s + (x - lo)
        return None

    def a_point(self, t) -> DissipativePoint:
        for (lab, lo, hi), s in zip(self.a_pieces, self._a_starts):
            if s <= t < s + (hi - lo):
                return DissipativePoint(lab, lo + (t - s))
        raise ModelError("position outside A")

    def a_line(self) -> IntervalSet:
        return IntervalSet.interval(0, self.beta)

    # -- dynamics --------------------------------------------------------------
    def _local(self, p: ConservativePoint) -> ConservativePoint:
        return from_root(self.part, p)

    def in_patch(self, p) -> bool:
        if isinstance(p, DissipativePoint):
            return self.a_pos(p.label, p.x) is not None
        q = self._local(p)
        return q.level == q.height - 1

    def apply(self, p, inverse: bool = False):
        if not inverse:
            if isinstance(p, DissipativePoint):
                t = self.a_pos(p.label, p.x)
                if t is None:
                    return self.T.apply(p)
                b = self.part.from_line(t)
                return to_root(self.part, ConservativePoint(self.part.height_of(b), 0, b))
            q = self._local(p)
            if q.level == q.height - 1:
                a = self.a_point(self.part.line(q.x))
                return DissipativePoint(a.label, a.x + self.dissipative.width(a.label))
            return self.T.apply(p)
        if isinstance(p, DissipativePoint):
            d = self.dissipative.width(p.label)
            t = self.a_pos(p.label, p.x - d)
            if t is None:
                return self.T.apply(p, inverse=True)
            b = self.part.from_line(t)
            h = self.part.height_of(b)
            return to_root(self.part, ConservativePoint(h, h - 1, b))
        q = self._local(p)
        if q.level == 0:
            return self.a_point(self.part.line(q.x))
        return self.T.apply(p, inverse=True)

    def __call__(self, p):
        return self.apply(p)

    def climb(self, p: ConservativePoint, inverse: bool = False):
        """``(q, k)``: ``q`` is the top (bottom when inverse) of the local tower of ``p``, ``k`` steps away."""
        q = self._local(p)
        level = 0 if inverse else q.height - 1
        return to_root(self.part, ConservativePoint(q.height, level, q.x)), abs(level - q.level)

    # -- fundamental coordinates -------------------------------------------------
    def coords(self, p):
        if isinstance(p, ConservativePoint):
            q = self._local(p)
            a = self.a_point(self.part.line(q.x))
            return a.label, a.x, q.level + 1
        d = self.dissipative.width(p.label)
        m = (p.x / d).floor()
        y = p.x - d * m
        t = self.a_pos(p.label, y)
        if t is None or m <= 0:
            return p.label, y, m
        return p.label, y, m + self.part.height_of(self.part.from_line(t))

    def point(self, label, y, k):
        d = self.dissipative.width(label)
        t = self.a_pos(label, y)
        if t is None or k <= 0:
            return DissipativePoint(label, y + d * k)
        b = self.part.from_line(t)
        n = self.part.height_of(b)
        if k <= n:
            return to_root(self.part, ConservativePoint(n, k - 1, b))
        return DissipativePoint(label, y + d * (k - n))

    def to_json(self) -> dict:
        return {
            "type": "absorbed",
            "transformation": self.T.to_json(),
            "B_measure": str(self.beta),
            "A": [[lab, str(lo), str(hi)] for lab, lo, hi in self.a_pieces],
            "presentation_heights": self.part.heights.to_json(),
        }


def absorb(T: Transformation, eps, budget: int = 100_000) -> CertifiedMap:
    """Swallow the conservative part into the dissipative part at cost ``2 lambda(B) < eps``."""
    eps = as_exact(eps)
    if not eps > 0:
        raise ConjugacyError("epsilon must be positive")
    if T.conservative is None:
        raise ConjugacyError("conservative part empty")
    if T.dissipative.is_empty():
        raise ConjugacyError("dissipative part empty")
    d = T.dissipative.total()
    bound = eps / 2 if d == INFINITY or eps / 2 < d else d
    part = shrink_base(T.conservative, bound, budget)
    beta = part.base_measure
    if not (beta * 2 < eps and (d == INFINITY or beta <= d)):
        raise BudgetExceeded("could not make the base small enough")
    line = _DomainLine(T.dissipative)
    Tt = AbsorbedTransformation(T, part, line.leftmost(beta))
    cert = Certificate(eps, Tt.disagreement, True, "lambda", ("absorb: differs exactly on A and on the tower tops",))
    return CertifiedMap(
        "patched",
        cert,
        lambda p: p,
        T,
        Tt,
        exception=Tt.in_patch,
        data={"B_measure": str(beta), "A": Tt.to_json()["A"], "dissipative": True},
    )


# ---------------------------------------------------------------------------
# patches


@dataclass(frozen=True)
class Patch:
    """Precompose ``T`` with a permutation ``pi`` of a region.

    ``where`` is ``("shift", label)`` or ``("tower", height, level)``; ``pi`` is a
    piecewise translation of an interval (component line or base line) onto itself.
    """

    where: tuple
    pi: PiecewiseTranslation

    def region(self) -> IntervalSet:
        return self.pi.domain()

    def moved_measure(self) -> ExactNum:
        return disagreement(self.pi, PiecewiseTranslation.identity(self.pi.domain()))

    def moved(self) -> IntervalSet:
        out = []
        for lo, hi, s in self.pi.legs:
            if s:
                out.append((lo, hi))
        return IntervalSet(out)

    def to_json(self) -> dict:
        return {"where": list(self.where), "pi": self.pi.to_json()}


class PatchedTransformation:
    """``T o pi`` on each patch region and ``T`` elsewhere."""

    def __init__(self, T, patches=()):
        self.T = T
        self.patches = tuple(patches)
        self.dissipative = T.dissipative
        self.conservative = T.conservative
        for pt in self.patches:
            if pt.pi.domain() != pt.pi.range():
                raise ModelError("patch must permute its region")

    aperiodic = True

    def _patch_for(self, p):
        for pt in self.patches:
            if isinstance(p, DissipativePoint) and pt.where == ("shift", p.label) and p.x in pt.pi.domain():
                return pt
            if isinstance(p, ConservativePoint) and pt.where == ("tower", p.height, p.level):
                if self.conservative.line(p.x) in pt.pi.domain():
                    return pt
        return None

    def apply(self, p, inverse: bool = False):
        if not inverse:
            pt = self._patch_for(p)
            if pt is not None:
                if isinstance(p, DissipativePoint):
                    p = DissipativePoint(p.label, pt.pi(p.x))
                else:
                    p = ConservativePoint(p.height, p.level, self.conservative.from_line(pt.pi(self.conservative.line(p.x))))
            return self.T.apply(p)
        q = self.T.apply(p, inverse=True)
        pt = self._patch_for(q)
        if pt is None:
            return q
        inv = pt.pi.invert()
        if isinstance(q, DissipativePoint):
            return DissipativePoint(q.label, inv(q.x))
        return ConservativePoint(q.height, q.level, self.conservative.from_line(inv(self.conservative.line(q.x))))

    def __call__(self, p):
        return self.apply(p)

    def disagreement(self) -> ExactNum:
        total = ZERO
        for pt in self.patches:
            total = total + pt.moved_measure()
        return total

    def to_json(self) -> dict:
        return {"type": "patched", "transformation": self.T.to_json(), "patches": [p.to_json() for p in self.patches]}


@dataclass(frozen=True)
class PerturbationRecord:
    eps: ExactNum
    d1: object
    exhibited: object
    removed: ExactNum
    holds: bool

    def to_json(self) -> dict:
        return {"epsilon": str(self.eps), "d1": str(self.d1), "exhibited": str(self.exhibited),
                "removed": str(self.removed), "holds": self.holds}


def _project(intervals: IntervalSet, d) -> IntervalSet:
    """Reduce a subset of the line modulo ``d`` into ``[0, d)``."""
    out = IntervalSet()
    for lo, hi in intervals:
        k = (lo / d).floor()
        while d * k < hi:
            a = lo if lo > d * k else d * k
            b = hi if hi < d * (k + 1) else d * (k + 1)
            if a < b:
                out = out | IntervalSet.interval(a - d * k, b - d * k)
            k += 1
    return out


def perturbation_bound_check(T1, T2) -> PerturbationRecord:
    """Exhibit a fundamental domain of measure at least ``d1 - eps`` for the perturbed map.

    Supported pairs: ``T2`` a :class:`PatchedTransformation` of ``T1``, an
    :class:`AbsorbedTransformation` of ``T1``, or ``T1`` absorbed and ``T2``
    its original.  The orbits through the fundamental domain of ``T1`` that
    meet the region where the maps differ are removed; the rest of the domain
    still meets every remaining orbit exactly once under ``T2``.
    """
    if isinstance(T2, PatchedTransformation) and T2.T is T1:
        eps = T2.disagreement()
        d1 = hopf(T1)[0] if isinstance(T1, Transformation) else T1.dissipative.total()
        coords = T1.coordinates if isinstance(T1, AbsorbedTransformation) else _ShiftCoordinates(T1.dissipative)
        hit: dict = {}
        for pt in T2.patches:
            moved = pt.moved()
            if moved.is_empty():
                continue
            if pt.where[0] == "shift":
                # orbits through D1 meet the moved set in its reduction mod d;
                # for an absorbed map the strips A + k*d reduce to A as well
                label = pt.where[1]
                d = T1.dissipative.width(label)
                hit[label] = hit.get(label, IntervalSet()) | _project(moved, d)
            elif isinstance(T1, AbsorbedTransformation):
                for lo, hi in _absorbed_tower_projection(T1, pt):
                    for lab, x0, x1 in _a_segment(T1, lo, hi):
                        hit[lab] = hit.get(lab, IntervalSet()) | IntervalSet.interval(x0, x1)
        removed = ZERO
        for s in hit.values():
            removed = removed + s.measure()
    elif isinstance(T2, AbsorbedTransformation) and T2.T is T1:
        eps = T2.disagreement
        d1 = hopf(T1)[0]
        removed = T2.beta
    elif isinstance(T1, AbsorbedTransformation) and T2 is T1.T:
        eps = T1.disagreement
        d1 = T1.dissipative.total()
        removed = T1.beta
    else:
        raise ConjugacyError("unsupported perturbation pair")
    exhibited = d1 if d1 == INFINITY else d1 - removed
    holds = d1 == INFINITY or exhibited >= d1 - eps
    return PerturbationRecord(eps, d1, exhibited, removed, holds)


def _absorbed_tower_projection(Tt: AbsorbedTransformation, pt: Patch):
    """A-line image of a tower patch region of an absorbed map."""
    _, n, level = pt.where
    out = IntervalSet()
    for lo, hi in pt.moved():
        for m, l2, a, b in pieces_from_root(Tt.part, (n, level, lo, hi)):
            if m is None:
                raise BudgetExceeded("patch reaches unresolved tail slots")
            out = out | IntervalSet.interval(a, b)
    return out


def _a_segment(Tt: AbsorbedTransformation, lo, hi):
    for (lab, x0, x1), s in zip(Tt.a_pieces, Tt._a_starts):
        a, b = max(lo, s), min(hi, s + (x1 - x0))
        if a < b:
            yield lab, x0 + (a - s), x0 + (b - s)


# ---------------------------------------------------------------------------
# fundamental-domain checks


@dataclass
class DomainVerdict:
    status: str  # verified_on_samples, counterexample or inconclusive
    samples: int
    inconclusive: int = 0
    counterexample: object = None
    hits: int = 0

    @property
    def verified(self) -> bool:
        return self.status == "verified_on_samples"

    def to_json(self) -> dict:
        return {"status": self.status, "samples": self.samples, "inconclusive": self.inconclusive,
                "counterexample": str(self.counterexample) if self.counterexample is not None else None,
                "hits": self.hits}


def fundamental_domain_check(M, D: Optional[dict] = None, sample_points: int = 1000, step_budget: int = 10_000,
                             seed: int = 0, max_height: Optional[int] = None) -> DomainVerdict:
    """Falsifier for ``D`` meeting every orbit exactly once.

    ``D`` maps component labels to interval sets (default: ``[0, d)`` each).
    Orbits are followed forward until they leave to the right of every
    patched or selected interval, and backward until they leave to the left.
    """
    if isinstance(M, CertifiedMap):
        M = M.target
    dis = M.dissipative
    if D is None:
        D = {label: IntervalSet.interval(0, dis.width(label)) for label in dis.labels(limit=3)}
    absorbed = isinstance(M, AbsorbedTransformation)
    patches = M.patches if isinstance(M, PatchedTransformation) else ()

    def bounds(label):
        d = dis.width(label)
        lo, hi = ZERO, d
        s = D.get(label)
        if s is not None and not s.is_empty():
            lo, hi = min(lo, s.inf), max(hi, s.sup)
        for pt in patches:
            if pt.where == ("shift", label):
                lo, hi = min(lo, pt.region().inf - d), max(hi, pt.region().sup + d)
        if absorbed:
            hi = hi + d
        return lo, hi

    def in_D(p):
        if not isinstance(p, DissipativePoint):
            return False
        s = D.get(p.label)
        return s is not None and p.x in s

    rng = random.Random(seed)
    inconclusive = 0
    total_hits = 0
    for _ in range(sample_points):
        if absorbed or M.conservative is None:
            p = sample_point(M, rng, max_height)
        else:
            # only the dissipative part is swept out by D
            p = sample_point(Transformation(dis), rng)
        hits = 0
        done = 0
        for inverse in (False, True):
            cur = p
            if not inverse and in_D(cur):
                hits += 1
            steps = 0
            while steps < step_budget:
                if isinstance(cur, DissipativePoint):
                    lo, hi = bounds(cur.label)
                    if (not inverse and cur.x >= hi) or (inverse and cur.x < lo):
                        done += 1
                        break
                elif absorbed:
                    # tower levels never lie in D: jump to where the orbit leaves the tower
                    cur, k = M.climb(cur, inverse)
                    steps += k
                    if steps >= step_budget:
                        break
                cur = M.apply(cur, inverse=inverse)
                steps += 1
                if in_D(cur):
                    hits += 1
                    if hits > 1:
                        return DomainVerdict("counterexample", sample_points, inconclusive, p, total_hits + hits)
        if done < 2:
            inconclusive += 1
            continue
        if hits != 1:
            return DomainVerdict("counterexample", sample_points, inconclusive, p, total_hits + hits)
        total_hits += hits
    status = "verified_on_samples" if inconclusive == 0 else "inconclusive"
    return DomainVerdict(status, sample_points, inconclusive, None, total_hits)


# ---------------------------------------------------------------------------
# lambda-approximate conjugacy


def _repack_map(C1, C2, line1: _DomainLine, line2: _DomainLine):
    def forward(p):
        label, y, k = C1.coords(p)
        lab2, y2 = line2.locate(line1.position(label, y))
        return C2.point(lab2, y2, k)
    return forward


def lambda_approx_conjugacy(T1: Transformation, T2: Transformation, eps, force_through: int = 8,
                            budget: Optional[int] = None, iteration_budget: int = 100_000) -> CertifiedMap:
    """``S`` with ``lambda{S T1 S^-1 != T2} < eps`` whenever the fundamental-domain measures agree."""
    eps = as_exact(eps)
    if not eps > 0:
        raise ConjugacyError("epsilon must be positive")
    cls = classify(T1, T2)
    if not cls.possible:
        raise ConjugacyError(str(cls))
    if cls.d1 == ZERO:
        return _tower_matching(T1, T2, eps, force_through, budget, iteration_budget)

    sides = []
    share = eps / 2 if (T1.conservative is not None and T2.conservative is not None) else eps
    parts = []
    for T in (T1, T2):
        if T.conservative is None:
            sides.append((T, _ShiftCoordinates(T.dissipative), None))
        else:
            m = absorb(T, share, iteration_budget)
            parts.append(m)
            sides.append((T, m.target, m.target))
    (_, C1, A1), (_, C2, A2) = sides
    line1, line2 = _DomainLine(T1.dissipative), _DomainLine(T2.dissipative)
    if line1.total() != line2.total():
        raise ConjugacyError("fundamental domains differ")
    forward = _repack_map(C1, C2, line1, line2)
    if not parts:
        cert = Certificate(eps, ZERO, True, "lambda", ("dissipative repack: exact conjugacy",))
        return CertifiedMap("dissipative_repack", cert, forward, T1, T2)
    bound = ZERO
    for m in parts:
        bound = bound + m.certificate.bound
    cert = Certificate(eps, bound, False, "lambda", ("absorb the conservative parts", "exact repack of the absorbed maps"))

    def exception(p):
        return (A1 is not None and A1.in_patch(p)) or (A2 is not None and A2.in_patch(forward(p)))

    return CertifiedMap("composite", cert, forward, T1, T2, exception=exception, parts=tuple(parts),
                        data={"absorbed_sides": [A1 is not None, A2 is not None]})


def _tower_matching(T1, T2, eps, force_through, budget, iteration_budget) -> CertifiedMap:
    P1, P2, targets = match_distributions(T1, T2, eps, force_through, budget, iteration_budget)

    def forward(p):
        q = from_root(P1.origin, p)
        chunk = P1.resolve(q)
        pos = P1.class_position(q, chunk)
        return to_root(P2.origin, P2.point_at(chunk.height, pos, chunk.sublevel))

    def exception(p):
        chunk = P1.resolve(from_root(P1.origin, p))
        return chunk.sublevel == chunk.height - 1

    bound = targets.total()
    cert = Certificate(eps, bound, False, "lambda",
                       ("common return-time distribution on bases of equal measure",
                        "failures only on the tower tops, of total measure lambda(B1)"))
    data = {
        "base_measure": str(bound),
        "headroom": str(targets.headroom),
        "forced_through": force_through,
        "side1": P1.to_json(),
        "side2": P2.to_json(),
    }
    m = CertifiedMap("tower_matching", cert, forward, T1, T2, exception=exception, data=data)
    m.presentations = (P1, P2)
    m.targets = targets
    heights = list(range(1, force_through + 1))

    def sampler(rng, denominator=1 << 16):
        # uniform over the forced towers, i.e. final heights <= force_through
        h = rng.choices(heights, weights=[float(targets(n)) * n for n in heights])[0]
        pos = targets(h) * ExactNum(rng.randrange(denominator)) / denominator
        return to_root(P1.origin, P1.point_at(h, pos, rng.randrange(h)))

    if heights:
        m.sampler = sampler
    return m


# ---------------------------------------------------------------------------
# mu-approximate conjugacy


class _FloorPacking:
    """The Rokhlin base of a set, packed onto ``[0, infinity)`` rank by rank.

    Rank ``r`` holds every block of the tower with layout index ``r`` (block
    ``q`` at offset ``q * w``) and the shift cells ``(c, z)`` with ``c + z = r``
    (``z`` zigzagging through the multiples of ``N*d``).  Towers of an
    infinite skyscraper carry comparable mass, so positions grow steadily.
    """

    def __init__(self, rs: RokhlinSet, T: Transformation):
        self.rs = rs
        self.dis = T.dissipative
        self.mu = MuWeights(Transformation(T.dissipative, rs.part)) if rs.part is not None else MuWeights(T)
        self._prefix = [ZERO]  # start of every rank
        self._ranks = []       # pieces of every rank: (kind, key, measure)

    def _tower_mass(self, n, w):
        blocks = self.rs.blocks(n)
        mass = w * blocks
        tr = self.rs.trim
        if tr is not None and tr.kind == "tower" and tr.n == n:
            mass = mass - tr.mass
        return mass

    def _rank(self, r: int):
        while len(self._ranks) <= r:
            k = len(self._ranks)
            pieces = []
            tower = self.mu.tower(k) if self.rs.part is not None else None
            if tower is not None:
                n, w = tower
                if self.rs.blocks(n):
                    pieces.append(("tower", n, self._tower_mass(n, w)))
            for c in range(k + 1):
                comp = self.mu.component(c)
                if comp is None:
                    break
                label, d = comp
                m = MuWeights.zigzag(k - c)
                tr = self.rs.trim
                cut = tr.t if m == 0 and tr is not None and tr.kind == "shift" and tr.label == label else ZERO
                pieces.append(("cell", (label, m), d - cut))
            if not pieces and tower is None and len(self._ranks) > 10_000:
                raise ModelError("Rokhlin base has finite measure")
            total = ZERO
            for *_, mass in pieces:
                total = total + mass
            self._ranks.append(pieces)
            self._prefix.append(self._prefix[-1] + total)
        return self._ranks[r]

    def _block_offset(self, n, q, u):
        w = self.rs.part.heights.width(n)
        tr = self.rs.trim
        off = w * q + u
        if tr is not None and tr.kind == "tower" and tr.n == n and q > tr.q0:
            off = off - tr.t * (min(q, tr.q + 1) - tr.q0)
        return off

    def position(self, a) -> ExactNum:
        if isinstance(a, DissipativePoint):
            d = self.dis.width(a.label)
            m = (a.x / (d * self.rs.N)).floor()
            c = self.mu.component_index(a.label)
            r = c + MuWeights.unzigzag(m)
            key = ("cell", (a.label, m))
            inner = a.x - d * m * self.rs.N
        else:
            r = self.mu.tower_index(a.height)
            key = ("tower", a.height)
            inner = self._block_offset(a.height, a.level // self.rs.N, self.rs.part.offset_in_tower(a))
        acc = self._prefix[r] if r < len(self._ranks) else None
        pieces = self._rank(r)
        acc = self._prefix[r]
        for kind, k, mass in pieces:
            if (kind, k) == key:
                return acc + inner
            acc = acc + mass
        raise ModelError("point is not in the Rokhlin base")

    def locate(self, t):
        r = 0
        while True:
            self._rank(r)
            if self._prefix[r + 1] > t:
                break
            r += 1
            if r > 1_000_000:
                raise BudgetExceeded("packing search did not terminate")
        acc = self._prefix[r]
        for kind, k, mass in self._ranks[r]:
            if t < acc + mass:
                inner = t - acc
                if kind == "tower":
                    return self._tower_point(k, inner)
                label, m = k
                d = self.dis.width(label)
                return DissipativePoint(label, d * m * self.rs.N + inner)
            acc = acc + mass
        raise ModelError("position not found")

    def _tower_point(self, n, inner):
        w = self.rs.part.heights.width(n)
        tr = self.rs.trim
        if tr is not None and tr.kind == "tower" and tr.n == n and inner >= w * tr.q0:
            # the trimmed blocks are packed at width w - t
            start, short = w * tr.q0, w - tr.t
            if inner < start + short * tr.count:
                i = ((inner - start) / short).floor()
                return ConservativePoint(n, (tr.q0 + i) * self.rs.N,
                                         self.rs.part.base_point(n, inner - start - short * i))
            inner = inner + tr.mass
        q = (inner / w).floor()
        u = inner - w * q
        return ConservativePoint(n, q * self.rs.N, self.rs.part.base_point(n, u))


def _offset_in(s: IntervalSet, x) -> ExactNum:
    acc = ZERO
    for lo, hi in s:
        if lo <= x < hi:
            return acc + (x - lo)
        acc = acc + (hi - lo)
    raise ModelError("coordinate outside the set")


def _at_offset(s: IntervalSet, t):
    for lo, hi in s:
        if t < hi - lo:
            return lo + t
        t = t - (hi - lo)
    raise ModelError("offset beyond the set")


class _ComplementPacking:
    """The uncovered part of a Rokhlin set packed onto ``[0, measure)``.

    Order: the trimmed block (level by level), then every tower in layout
    order, level by level from ``N * floor(n / N)`` to the top.
    """

    def __init__(self, rs: RokhlinSet):
        self.rs = rs
        self.part = rs.part
        self.N = rs.N

    def _trim_len(self):
        return self.rs.trim.mass * self.N if self.rs.trim is not None else ZERO

    def _towers(self):
        if self.part is None:
            return
        dist = self.part.heights
        for n, w in dist.explicit.items():
            yield n, w
        if dist.tail is not None:
            j = dist.tail.start
            while True:
                yield dist.tail.height(j), dist.tail.width(j)
                j += 1

    def position(self, p) -> ExactNum:
        N, tr = self.N, self.rs.trim
        if isinstance(p, DissipativePoint):
            d = self.rs._width(p.label)
            i = (p.x / d).floor()
            return tr.t * i + (p.x - d * i - (d - tr.t))
        u = self.part.offset_in_tower(p)
        if tr is not None and tr.covers(p.height, p.level, N):
            w = self.part.heights.width(p.height)
            if u >= w - tr.t:
                return tr.t * (p.level - tr.q0 * N) + (u - (w - tr.t))
        acc = self._trim_len()
        for n, w in self._towers():
            top = N * (n // N)
            if n == p.height:
                return acc + w * (p.level - top) + u
            acc = acc + w * (n - top)
        raise ModelError("unreachable")

    def locate(self, t) -> ConservativePoint:
        N, tr = self.N, self.rs.trim
        if tr is not None and t < self._trim_len():
            i = (t / tr.t).floor()
            if tr.kind == "shift":
                d = self.rs._width(tr.label)
                return DissipativePoint(tr.label, d * i + d - tr.t + (t - tr.t * i))
            w = self.part.heights.width(tr.n)
            u = w - tr.t + (t - tr.t * i)
            return ConservativePoint(tr.n, tr.q0 * N + i, self.part.base_point(tr.n, u))
        t = t - self._trim_len()
        for count, (n, w) in enumerate(self._towers()):
            k = n % N
            if t < w * k:
                i = (t / w).floor()
                return ConservativePoint(n, N * (n // N) + i, self.part.base_point(n, t - w * i))
            t = t - w * k
            if count > 10_000_000:
                break
        raise BudgetExceeded("complement position not found")


def _rs_point(rs: RokhlinSet, p):
    """A root-coordinate point in the coordinates of the Rokhlin presentation."""
    if isinstance(p, ConservativePoint):
        return from_root(rs.part, p)
    return p


def _rs_root(rs: RokhlinSet, p):
    if isinstance(p, ConservativePoint):
        return to_root(rs.part, p)
    return p


def _rs_apply(rs: RokhlinSet, T: Transformation, p, times: int):
    for _ in range(times):
        if isinstance(p, ConservativePoint):
            p = rs.part.apply(p)
        else:
            p = T.dissipative.apply(p)
    return p


def _mu_of_translates(w: MuWeights, rs: RokhlinSet, J: int, shift: int, which: str):
    """Window value and exact upper bound of ``mu(T^shift(X))`` for X the base or the complement."""
    N = rs.N

    def tower_part(piece):
        total = ZERO
        for r in shift_piece(rs.part, piece, -shift):
            total = total + (rs.base_part(r) if which == "base" else rs.complement_part(r))
        return total

    def shift_part(label, lo, hi):
        d = w.T.dissipative.width(label)
        k = (lo / d).floor()
        tr = rs.trim
        cut = tr.t if tr is not None and tr.kind == "shift" and tr.label == label else ZERO
        if which == "complement":
            return cut if 0 <= k - shift < N else ZERO
        if (k - shift) % N:
            return ZERO
        return hi - lo - cut if k == shift else hi - lo

    return w.upper_measure(J, tower_part, shift_part)


def mu_approx_conjugacy(T1: Transformation, T2: Transformation, eps, budget: int = 100_000,
                        window: Optional[int] = None, rounds: int = 6) -> CertifiedMap:
    """``S`` with ``mu{S T1 S^-1 != T2} < eps``.

    ``mu`` is the cell measure of :class:`MuWeights` on ``T2``'s space, with
    tower cells taken in the presentation that carries the Rokhlin set.
    """
    eps = as_exact(eps)
    if not eps > 0:
        raise ConjugacyError("epsilon must be positive")
    if not (T1.aperiodic and T2.aperiodic):
        raise ConjugacyError("both maps must be aperiodic")
    if eps > 1:
        cert = Certificate(eps, ONE, False, "mu", ("mu is a probability measure",))
        return CertifiedMap("identity", cert, lambda p: p, T1, T2)
    if T1.to_json() == T2.to_json():
        cert = Certificate(eps, ZERO, True, "mu", ("identical models: the identity conjugates exactly",))
        return CertifiedMap("identity", cert, lambda p: p, T1, T2)
    for T in (T1, T2):
        if T.dissipative.is_empty() and not T.conservative.infinite_total_measure:
            raise ConjugacyError("finite total measure")
    N = (4 / eps).floor() + 1
    J = 1
    while not ExactNum(2) ** J * eps > 32:
        J += 1
    J = window or J
    eta = eps / 4
    for _ in range(rounds):
        R1 = rokhlin_set(T1, N, eta, budget)
        R2 = rokhlin_set(T2, N, eta, budget)
        c1, c2 = R1.complement_measure(), R2.complement_measure()
        eps_prime = c1 if c1 > c2 else c2
        if c1 < eps_prime:
            R1 = R1.with_trim(eps_prime - c1)
        if c2 < eps_prime:
            R2 = R2.with_trim(eps_prime - c2)
        w = MuWeights(Transformation(T2.dissipative, R2.part)) if R2.part is not None else MuWeights(T2)
        tops = [_mu_of_translates(w, R2, J, s + N - 1, "base") for s in range(N)]
        k2 = min(range(N), key=lambda s: tops[s][1])
        comp = _mu_of_translates(w, R2, J, k2, "complement")
        bound = comp[1] + tops[k2][1]
        if bound < eps:
            break
        eta = eta / 4
    else:
        raise BudgetExceeded("could not certify below epsilon")

    F1, F2 = _FloorPacking(R1, T1), _FloorPacking(R2, T2)
    E1, E2 = _ComplementPacking(R1), _ComplementPacking(R2)

    def core(p):
        q = _rs_point(R1, p)
        fl = R1.floor_of(q)
        if fl is None:
            y = E2.locate(E1.position(q))
        else:
            j, a = fl
            y = _rs_apply(R2, T2, F2.locate(F1.position(a)), j)
        return y

    def forward(p):
        return _rs_root(R2, _rs_apply(R2, T2, core(p), k2))

    def exception(p):
        fl = R1.floor_of(_rs_point(R1, p))
        return fl is None or fl[0] == N - 1

    cert = Certificate(eps, bound, False, "mu", (
        f"Rokhlin sets of order {N} with complements of equal measure {eps_prime}",
        f"shift {k2} chosen to minimise the top floor",
        f"mu over the first {J} cells, remaining mass counted fully",
    ))
    data = {
        "N": N,
        "complement_measure": str(eps_prime),
        "shift": k2,
        "window_cells": J,
        "complement_mu": [str(comp[0]), str(comp[1])],
        "top_floor_mu": [str(tops[k2][0]), str(tops[k2][1])],
        "rokhlin": [R1.to_json(), R2.to_json()],
    }
    m = CertifiedMap("mu_floor_matching", cert, forward, T1, T2, exception=exception, data=data)
    m.rokhlin = (R1, R2)
    m.mu = w
    return m
