"""Skyscraper-plus-shift models of infinite measure-preserving bijections.

A :class:`Transformation` is the disjoint union of

* a dissipative part: finitely many (or countably many equal) components,
  each a copy of the real line with the shift ``x -> x + d_i``;
* a conservative part: a skyscraper over a finite-measure base ``B`` with a
  measure-preserving base map ``sigma`` and a height function given by a
  :class:`HeightDistribution`.  Towers are laid out on ``B`` left to right
  (explicit heights ascending, then tail entries), so a tower is named by its
  height.

The Hopf splitting is part of the representation.  The skyscraper is the
Kakutani-Rokhlin partition over ``B``: a point at level ``k`` of the tower of
height ``n`` moves to level ``k + 1``; from the top level it re-enters the
base through ``sigma``.
"""
from __future__ import annotations

import random
import warnings
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .distribution import DistributionError, HeightDistribution
from .exact import INFINITY, ExactNum, as_exact, parse_exact
from .geometry import GeometryError, IntervalSet, PiecewiseTranslation, pack

__all__ = [
    "BudgetExceeded",
    "ConservativePart",
    "ConservativePoint",
    "DissipativePart",
    "DissipativePoint",
    "Induction",
    "ModelError",
    "Transformation",
    "build_conservative",
    "hopf",
    "induce",
    "return_distribution",
    "rotation",
    "shrink_base",
]

ZERO = ExactNum(0)


class ModelError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ConservativePoint:
    height: int
    level: int
    x: ExactNum

    def __str__(self):
        return f"C({self.height}, {self.level}, {self.x})"


@dataclass(frozen=True)
class DissipativePoint:
    label: str
    x: ExactNum

    def __str__(self):
        return f"D({self.label}, {self.x})"


Point = Union[ConservativePoint, DissipativePoint]


def rotation(alpha, lo=0, hi=1) -> PiecewiseTranslation:
    """Rotation of ``[lo, hi)`` by ``alpha`` (taken mod hi - lo)."""
    lo, hi, alpha = as_exact(lo), as_exact(hi), as_exact(alpha)
    beta = hi - lo
    alpha = alpha - beta * (alpha / beta).floor()
    if not alpha:
        return PiecewiseTranslation.identity(IntervalSet.interval(lo, hi))
    cut = hi - alpha
    return PiecewiseTranslation([(lo, cut, alpha), (cut, hi, alpha - beta)])


def _is_irrational_rotation(base: IntervalSet, sigma: PiecewiseTranslation) -> bool:
    if len(base) != 1 or len(sigma) != 2:
        return False
    lo, hi = base.pieces[0]
    (a0, a1, s0), (b0, b1, s1) = sigma.legs
    beta = hi - lo
    if not (a0 == lo and a1 == b0 and b1 == hi and s0 > 0 and s0 - s1 == beta):
        return False
    return not (s0 / beta).is_rational


class ConservativePart:
    """Skyscraper over ``base`` with base map ``base_map`` and tower heights ``heights``."""

    def __init__(
        self,
        base: IntervalSet,
        base_map: PiecewiseTranslation,
        heights: HeightDistribution,
        *,
        aperiodic: Optional[bool] = None,
        origin: Optional["Induction"] = None,
    ):
        if base.is_empty():
            raise ModelError("empty base")
        if base_map.domain() != base or base_map.range() != base:
            raise ModelError("base map is not a bijection of the base onto itself")
        if heights.total_width() != base.measure():
            raise ModelError(
                f"tower widths sum to {heights.total_width()} but the base has measure {base.measure()}"
            )
        self.base = base
        self.base_map = base_map
        self.heights = heights
        self.origin = origin
        detected = _is_irrational_rotation(base, base_map)
        if aperiodic is None:
            aperiodic = detected
        elif aperiodic and not detected and origin is None:
            raise ModelError("aperiodic flag needs an irrational rotation base map")
        self.aperiodic = aperiodic
        if not aperiodic:
            warnings.warn("base map is not an irrational rotation; the skyscraper may be periodic", stacklevel=2)
        self._to_line = pack(base)
        self._from_line = self._to_line.invert()
        self._inv_map = base_map.invert()

    # -- measures --------------------------------------------------------
    @property
    def base_measure(self) -> ExactNum:
        return self.base.measure()

    @property
    def infinite_total_measure(self) -> bool:
        return self.heights.infinite_total_measure

    def total_measure(self):
        return self.heights.mass()

    # -- layout ----------------------------------------------------------
    def line(self, x) -> ExactNum:
        return self._to_line(x)

    def from_line(self, t) -> ExactNum:
        return self._from_line(t)

    def height_of(self, x) -> int:
        """Height of the tower whose base slot contains the base point ``x``."""
        return self.heights.height_at(self._to_line(x))

    def layout_line(self, n: int) -> tuple[ExactNum, ExactNum]:
        start = self.heights.layout_start(n)
        return start, start + self.heights.width(n)

    def layout(self, n: int) -> IntervalSet:
        lo, hi = self.layout_line(n)
        return self._from_line.image(IntervalSet.interval(lo, hi))

    def offset_in_tower(self, p: ConservativePoint) -> ExactNum:
        """Position of ``p``'s base coordinate inside its tower slot, in ``[0, width)``."""
        return self._to_line(p.x) - self.heights.layout_start(p.height)

    def base_point(self, n: int, u) -> ExactNum:
        """Base coordinate at offset ``u`` of the slot of height ``n``."""
        return self._from_line(self.heights.layout_start(n) + u)

    # -- dynamics ----------------------------------------------------------
    def contains(self, p: ConservativePoint) -> bool:
        if not isinstance(p, ConservativePoint) or not 0 <= p.level < p.height:
            return False
        if p.x not in self.base:
            return False
        try:
            return self.height_of(p.x) == p.height
        except DistributionError:
            return False

    def apply(self, p: ConservativePoint, inverse: bool = False) -> ConservativePoint:
        if not inverse:
            if p.level + 1 < p.height:
                return ConservativePoint(p.height, p.level + 1, p.x)
            y = self.base_map(p.x)
            return ConservativePoint(self.height_of(y), 0, y)
        if p.level > 0:
            return ConservativePoint(p.height, p.level - 1, p.x)
        y = self._inv_map(p.x)
        h = self.height_of(y)
        return ConservativePoint(h, h - 1, y)

    def base_return(self, x) -> ExactNum:
        return self.base_map(x)

    def base_return_inverse(self, x) -> ExactNum:
        return self._inv_map(x)

    def sample_point(self, rng: random.Random, max_height: Optional[int] = None, denominator: int = 1 << 20) -> ConservativePoint:
        """A point with rational offset drawn from towers of height <= max_height."""
        items = self.heights.items_upto(max_height if max_height is not None else self.heights.max_explicit_height() or 1)
        if not items:
            items = self.heights.items_upto(self.heights.tail.first_height)
        n, w = rng.choice(items)
        u = w * Fraction(rng.randrange(denominator), denominator)
        return ConservativePoint(n, rng.randrange(n), self.base_point(n, u))

    def root(self) -> "ConservativePart":
        part = self
        while part.origin is not None:
            part = part.origin.parent
        return part

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "base_map": self.base_map.to_json(),
            "heights": self.heights.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> "ConservativePart":
        return build_conservative(
            IntervalSet.from_json(data["base"]),
            PiecewiseTranslation.from_json(data["base_map"]),
            HeightDistribution.from_json(data["heights"]),
        )

    def __repr__(self):
        return f"ConservativePart(base={self.base}, legs={len(self.base_map)}, heights={self.heights})"


def build_conservative(base: IntervalSet, base_map: PiecewiseTranslation, heights: HeightDistribution) -> ConservativePart:
    return ConservativePart(base, base_map, heights)


class DissipativePart:
    """Shift components ``x -> x + d_i`` on labelled copies of the real line.

    ``infinite_tail`` adds countably many further components of a common width,
    labelled ``tail:0``, ``tail:1``, ...
    """

    def __init__(self, components=(), infinite_tail=None):
        comps = []
        seen = set()
        for label, w in components:
            w = as_exact(w)
            if not w > 0:
                raise ModelError("fundamental widths must be positive")
            label = str(label)
            if label in seen or label.startswith("tail:"):
                raise ModelError(f"bad component label {label!r}")
            seen.add(label)
            comps.append((label, w))
        self.components = tuple(comps)
        self.infinite_tail = as_exact(infinite_tail) if infinite_tail is not None else None
        if self.infinite_tail is not None and not self.infinite_tail > 0:
            raise ModelError("tail component width must be positive")
        self._widths = dict(comps)

    def is_empty(self) -> bool:
        return not self.components and self.infinite_tail is None

    def width(self, label: str) -> ExactNum:
        w = self._widths.get(label)
        if w is not None:
            return w
        if self.infinite_tail is not None and label.startswith("tail:") and label[5:].isdigit():
            return self.infinite_tail
        raise ModelError(f"unknown component {label!r}")

    def labels(self, limit: Optional[int] = None):
        """Component labels in canonical order; the tail is truncated at ``limit`` extra labels."""
        out = [label for label, _ in self.components]
        if self.infinite_tail is not None:
            out.extend(f"tail:{k}" for k in range(limit or 0))
        return out

    def total(self):
        if self.infinite_tail is not None:
            return INFINITY
        total = ZERO
        for _, w in self.components:
            total = total + w
        return total

    def apply(self, p: DissipativePoint, inverse: bool = False) -> DissipativePoint:
        d = self.width(p.label)
        return DissipativePoint(p.label, p.x - d if inverse else p.x + d)

    def contains(self, p) -> bool:
        if not isinstance(p, DissipativePoint):
            return False
        try:
            self.width(p.label)
        except ModelError:
            return False
        return True

    def in_domain(self, p: DissipativePoint) -> bool:
        """Membership in the canonical fundamental domain ``[0, d_i)`` of each component."""
        return ZERO <= p.x < self.width(p.label)

    def to_json(self) -> dict:
        return {
            "components": [[label, str(w)] for label, w in self.components],
            "infinite_tail": str(self.infinite_tail) if self.infinite_tail is not None else None,
        }

    @classmethod
    def from_json(cls, data) -> "DissipativePart":
        tail = data.get("infinite_tail")
        return cls([(label, parse_exact(w)) for label, w in data["components"]], parse_exact(tail) if tail else None)

    def __repr__(self):
        return f"DissipativePart({self.components}, tail={self.infinite_tail})"


class Transformation:
    """Hopf sum of a dissipative part and a conservative skyscraper."""

    def __init__(self, dissipative: Optional[DissipativePart] = None, conservative: Optional[ConservativePart] = None):
        self.dissipative = dissipative if dissipative is not None else DissipativePart()
        self.conservative = conservative
        if self.dissipative.is_empty() and conservative is None:
            raise ModelError("a transformation needs at least one nonempty part")

    @property
    def aperiodic(self) -> bool:
        return self.conservative is None or self.conservative.aperiodic

    def apply(self, p: Point, inverse: bool = False) -> Point:
        if isinstance(p, DissipativePoint):
            return self.dissipative.apply(p, inverse)
        if self.conservative is None:
            raise ModelError("no conservative part")
        return self.conservative.apply(p, inverse)

    def __call__(self, p: Point) -> Point:
        return self.apply(p)

    def contains(self, p: Point) -> bool:
        if isinstance(p, DissipativePoint):
            return self.dissipative.contains(p)
        return self.conservative is not None and self.conservative.contains(p)

    def to_json(self) -> dict:
        return {
            "dissipative": self.dissipative.to_json(),
            "conservative": self.conservative.to_json() if self.conservative is not None else None,
        }

    @classmethod
    def from_json(cls, data) -> "Transformation":
        cons = data.get("conservative")
        return cls(
            DissipativePart.from_json(data["dissipative"]),
            ConservativePart.from_json(cons) if cons else None,
        )

    def __repr__(self):
        return f"Transformation({self.dissipative!r}, {self.conservative!r})"


def hopf(T: Transformation):
    """``(d, dissipative part, conservative part)`` with ``d`` the fundamental-domain measure."""
    return T.dissipative.total(), T.dissipative, T.conservative


# ---------------------------------------------------------------------------
# induction


class Induction:
    """Identification between a part and the part induced on ``sub_base``.

    ``phi`` sends ``sub_base`` (parent base coordinates) onto the child's base.
    """

    def __init__(self, parent: ConservativePart, sub_base: IntervalSet, phi: PiecewiseTranslation):
        self.parent = parent
        self.sub_base = sub_base
        self.phi = phi
        self.phi_inv = phi.invert()
        self.child: Optional[ConservativePart] = None

    def to_child(self, p: ConservativePoint, budget: int = 10**6) -> ConservativePoint:
        parent = self.parent
        cur, steps = p.x, p.level
        while cur not in self.sub_base:
            budget -= 1
            if budget < 0:
                raise BudgetExceeded("backward excursion too long")
            cur = parent.base_return_inverse(cur)
            steps += parent.height_of(cur)
        y = self.phi(cur)
        return ConservativePoint(self.child.height_of(y), steps, y)

    def to_parent(self, p: ConservativePoint, budget: int = 10**6) -> ConservativePoint:
        parent = self.parent
        cur, level = self.phi_inv(p.x), p.level
        while True:
            h = parent.height_of(cur)
            if level < h:
                return ConservativePoint(h, level, cur)
            budget -= 1
            if budget < 0:
                raise BudgetExceeded("forward excursion too long")
            level -= h
            cur = parent.base_return(cur)


def to_root(part: ConservativePart, p: ConservativePoint) -> ConservativePoint:
    while part.origin is not None:
        p = part.origin.to_parent(p)
        part = part.origin.parent
    return p


def from_root(part: ConservativePart, p: ConservativePoint) -> ConservativePoint:
    chain = []
    cur = part
    while cur.origin is not None:
        chain.append(cur.origin)
        cur = cur.origin.parent
    for ind in reversed(chain):
        p = ind.to_child(p)
    return p


def _tail_cut_index(c: ConservativePart, sub_line: IntervalSet) -> Optional[int]:
    """Smallest tail index J whose tail region lies inside ``sub_line`` (line coordinates)."""
    tail = c.heights.tail
    beta = c.base_measure
    last_lo, last_hi = sub_line.pieces[-1]
    if last_hi != beta:
        return None
    E = c.heights.explicit_total()
    if last_lo <= E:
        return tail.start
    j = tail.index_at_position(last_lo - E)
    if E + tail.cumulative(j) < last_lo:
        j += 1
    return j


def induce(c: ConservativePart, sub_base: IntervalSet, iteration_budget: int = 100_000) -> ConservativePart:
    """First-return skyscraper on ``sub_base``, repacked onto ``[0, measure(sub_base))``.

    When the heights carry a tail, ``sub_base`` must contain the layout slots
    of all tail entries from some index on; the induced tail is then the same
    schema shifted by a constant excursion time.
    """
    if sub_base.is_empty() or sub_base.measure() == 0:
        raise ModelError("empty sub_base")
    if not sub_base.subtract(c.base).is_empty():
        raise ModelError("sub_base is not contained in the base")
    if sub_base == c.base:
        return c
    dist = c.heights
    beta = c.base_measure
    E = dist.explicit_total()
    sub_line = c._to_line.image(sub_base)

    J = None
    tail_line = IntervalSet()
    if dist.tail is not None:
        J = _tail_cut_index(c, sub_line)
        if J is None:
            raise ModelError("sub_base must contain a neighbourhood of the tail end of the base")
        tail_line = IntervalSet.interval(E + dist.tail.cumulative(J), beta)
    tail_region = c._from_line.image(tail_line) if not tail_line.is_empty() else IntervalSet()

    # finite slots (base coordinates) -> height
    slots: list[tuple[ExactNum, ExactNum, int]] = []
    finite = list(dist.explicit.items())
    if dist.tail is not None:
        finite += [(dist.tail.height(j), dist.tail.width(j)) for j in range(dist.tail.start, J)]
    for n, _w in finite:
        lo, hi = c.layout_line(n)
        for blo, bhi, s in c._from_line.restrict(IntervalSet.interval(lo, hi)).legs:
            slots.append((blo + s, bhi + s, n))
    slots.sort(key=lambda t: t[0])
    slot_los = [t[0] for t in slots]

    def split_by_slots(lo, hi):
        i = bisect_right(slot_los, lo) - 1
        out = []
        while lo < hi:
            slo, shi, n = slots[i]
            if not slo <= lo < shi:
                raise ModelError("point outside finite slots during excursion")
            top = min(hi, shi)
            out.append((lo, top, n))
            lo = top
            i += 1
        return out

    sub_pieces = list(sub_base)
    sub_los = [lo for lo, _ in sub_pieces]

    def split_by_sub_base(lo, hi):
        """``[lo, hi)`` as (pieces inside ``sub_base``, pieces outside), each in order."""
        inside, outside = [], []
        i = max(bisect_right(sub_los, lo) - 1, 0)
        while lo < hi:
            if i < len(sub_pieces):
                slo, shi = sub_pieces[i]
                if lo < slo:
                    top = min(hi, slo)
                    outside.append((lo, top))
                    lo = top
                    continue
                if lo < shi:
                    top = min(hi, shi)
                    inside.append((lo, top))
                    lo = top
                i += 1
            else:
                outside.append((lo, hi))
                break
        return inside, outside

    sigma = c.base_map
    # work items: source [lo, hi), current shift, accumulated time, tail flag
    work = []
    for lo, hi in sub_base.subtract(tail_region):
        for a, b, n in split_by_slots(lo, hi):
            work.append((a, b, ZERO, n, False))
    for lo, hi in tail_region:
        work.append((lo, hi, ZERO, 0, True))

    results = []
    budget = iteration_budget
    while work:
        budget -= 1
        if budget < 0:
            raise BudgetExceeded("induction did not close within the iteration budget")
        lo, hi, shift, acc, is_tail = work.pop()
        # apply the base map to the current image [lo+shift, hi+shift)
        for slo, shi, s in sigma.legs_on(lo + shift, hi + shift):
            new_shift = shift + s
            inside, outside = split_by_sub_base(slo + s, shi + s)
            for a, b in inside:
                results.append((a - new_shift, b - new_shift, new_shift, acc, is_tail))
            for a, b in outside:
                for x0, x1, n in split_by_slots(a, b):
                    work.append((x0 - new_shift, x1 - new_shift, new_shift, acc + n, is_tail))

    # ---- new distribution and layout
    pieces: dict[int, list] = {}  # height -> [(lo, hi, return shift)] in parent base coords
    tail_schema = None
    tail_legs = []  # (lo, hi, return shift) for the region covered by the schema
    for lo, hi, shift, acc, is_tail in results:
        if not is_tail:
            pieces.setdefault(acc, []).append((lo, hi, shift))
            continue
        tail = dist.tail
        for blo, bhi, ps in c._to_line.restrict(IntervalSet.interval(lo, hi)).legs:
            tlo, thi = blo + ps - E, bhi + ps - E  # tail-relative line coords
            if thi == tail.total():
                jstar = tail.index_at_position(tlo)
                if tail.cumulative(jstar) < tlo:
                    jstar += 1
                cut = tail.cumulative(jstar)
                if tlo < cut:
                    _emit_tail_slots(c, pieces, tlo, cut, shift, acc)
                tail_schema = (acc, jstar)
                region = c._from_line.image(IntervalSet.interval(E + cut, beta))
                tail_legs.extend((a, b, shift) for a, b in region)
            else:
                _emit_tail_slots(c, pieces, tlo, thi, shift, acc)

    new_tail = None
    if tail_schema is not None:
        extra, jstar = tail_schema
        new_tail = dist.tail.advanced(jstar).shifted(extra)
        # entries at or below the largest explicit height move to the explicit part,
        # which also resolves any height collisions
        top = max(pieces) if pieces else 0
        j = jstar
        while new_tail.height(j) <= top:
            j += 1
        if j > jstar:
            for jj in range(jstar, j):
                slot_lo = E + dist.tail.cumulative(jj)
                slot = c._from_line.image(IntervalSet.interval(slot_lo, slot_lo + dist.tail.width(jj)))
                moved = _clip_legs(tail_legs, slot)
                pieces.setdefault(new_tail.height(jj), []).extend(moved)
            keep = c._from_line.image(IntervalSet.interval(E + dist.tail.cumulative(j), beta))
            tail_legs = _clip_legs(tail_legs, keep)
            new_tail = new_tail.advanced(j)

    explicit = {}
    phi_legs = []
    return_legs = []
    cursor = ZERO
    for n in sorted(pieces):
        group = sorted(pieces[n], key=lambda t: t[0])
        width = ZERO
        for lo, hi, sh in group:
            phi_legs.append((lo, hi, cursor - lo))
            return_legs.append((lo, hi, sh))
            cursor = cursor + (hi - lo)
            width = width + (hi - lo)
        explicit[n] = width
    if new_tail is not None:
        for lo, hi, sh in sorted(tail_legs, key=lambda t: t[0]):
            phi_legs.append((lo, hi, cursor - lo))
            return_legs.append((lo, hi, sh))
            cursor = cursor + (hi - lo)
    # phi on the tail region must follow parent line order, which the sort by base
    # coordinate preserves since packing is order preserving
    phi = PiecewiseTranslation(phi_legs)
    R = PiecewiseTranslation(return_legs)
    new_base = IntervalSet.interval(ZERO, sub_base.measure())
    new_map = phi.compose(R.compose(phi.invert()))
    heights = HeightDistribution(explicit, new_tail)
    induction = Induction(c, sub_base, phi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        child = ConservativePart(new_base, new_map, heights, aperiodic=c.aperiodic, origin=induction)
    induction.child = child
    return child


def _clip_legs(legs, region: IntervalSet):
    out = []
    for a, b, sh in legs:
        for lo, hi in region:
            x0, x1 = max(a, lo), min(b, hi)
            if x0 < x1:
                out.append((x0, x1, sh))
    return out


def _emit_tail_slots(c: ConservativePart, pieces: dict, tlo, thi, shift, acc) -> None:
    """Split a tail-relative line interval by tail slots into explicit pieces."""
    tail = c.heights.tail
    E = c.heights.explicit_total()
    j = tail.index_at_position(tlo)
    while tlo < thi:
        top = min(thi, tail.cumulative(j + 1))
        region = c._from_line.image(IntervalSet.interval(E + tlo, E + top))
        n = tail.height(j) + acc
        pieces.setdefault(n, []).extend((a, b, shift) for a, b in region)
        tlo = top
        j += 1


def return_distribution(c: ConservativePart, sub_base="full", iteration_budget: int = 100_000) -> HeightDistribution:
    if isinstance(sub_base, str) and sub_base == "full":
        return c.heights
    return induce(c, sub_base, iteration_budget).heights


def shrink_base(c: ConservativePart, eps, iteration_budget: int = 100_000) -> ConservativePart:
    """Induce on a sub-base of measure < eps that still meets almost every orbit.

    The sub-base is an initial segment of the layout line plus, when the
    heights have a tail, the slots of all tail entries beyond some index.
    """
    eps = as_exact(eps)
    if not eps > 0:
        raise ModelError("epsilon must be positive")
    beta = c.base_measure
    if beta < eps:
        return c
    if not c.aperiodic:
        raise ModelError("shrinking needs an aperiodic (irrational rotation) base")
    half = eps / 2
    tail = c.heights.tail
    line_pieces = []
    if tail is not None:
        j = tail.start
        while not tail.remaining(j) < half:
            j += 1
        rest = tail.remaining(j)
        a = min(half, beta - rest)
        line_pieces = [(ZERO, a), (beta - rest, beta)]
    else:
        line_pieces = [(ZERO, half)]
    sub_line = IntervalSet(line_pieces)
    return induce(c, c._from_line.image(sub_line), iteration_budget)
