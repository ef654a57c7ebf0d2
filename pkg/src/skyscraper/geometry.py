"""Finite unions of half-open intervals and piecewise translations.

Intervals are always half-open, ``[lo, hi)``, so disjoint unions never double
count endpoints and every measure below is an exact sum of lengths.
"""
from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Sequence

from .exact import ExactNum, as_exact, parse_exact

__all__ = [
    "GeometryError",
    "IntervalSet",
    "PiecewiseTranslation",
    "disagreement",
    "pack",
]

ZERO = ExactNum(0)


class GeometryError(ValueError):
    pass


def _pair(piece) -> tuple[ExactNum, ExactNum]:
    lo, hi = piece
    lo, hi = as_exact(lo), as_exact(hi)
    if not lo < hi:
        raise GeometryError(f"empty or reversed interval [{lo}, {hi})")
    return lo, hi


class IntervalSet:
    """A finite disjoint union of half-open intervals, kept sorted and merged."""

    __slots__ = ("pieces", "_los")

    def __init__(self, pieces: Iterable = (), *, _trusted: bool = False):
        if _trusted:
            self.pieces = tuple(pieces)
        else:
            self.pieces = _canonical(sorted((_pair(p) for p in pieces), key=lambda p: p[0]))
        self._los = None

    @classmethod
    def interval(cls, lo, hi) -> "IntervalSet":
        return cls([(lo, hi)])

    # -- queries -------------------------------------------------------
    def measure(self) -> ExactNum:
        total = ZERO
        for lo, hi in self.pieces:
            total = total + (hi - lo)
        return total

    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def inf(self) -> ExactNum:
        return self.pieces[0][0]

    @property
    def sup(self) -> ExactNum:
        return self.pieces[-1][1]

    def __contains__(self, x) -> bool:
        if self._los is None:
            self._los = [p[0] for p in self.pieces]
        i = bisect_right(self._los, x) - 1
        return i >= 0 and x < self.pieces[i][1]

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self):
        return len(self.pieces)

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        body = ", ".join(f"[{lo}, {hi})" for lo, hi in self.pieces)
        return f"IntervalSet({{{body}}})"

    def translate(self, shift) -> "IntervalSet":
        return IntervalSet(((lo + shift, hi + shift) for lo, hi in self.pieces), _trusted=True)

    # -- algebra -------------------------------------------------------
    def union(self, other: "IntervalSet", disjoint: bool = False) -> "IntervalSet":
        if disjoint and not self.intersect(other).is_empty():
            raise GeometryError("disjoint union of overlapping sets")
        merged = sorted(self.pieces + other.pieces, key=lambda p: p[0])
        out: list[list] = []
        for lo, hi in merged:
            if out and lo <= out[-1][1]:
                if hi > out[-1][1]:
                    out[-1][1] = hi
            else:
                out.append([lo, hi])
        return IntervalSet((tuple(p) for p in out), _trusted=True)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self.pieces, other.pieces
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out, _trusted=True)

    def subtract(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        b = other.pieces
        j = 0
        for lo, hi in self.pieces:
            cur = lo
            while j < len(b) and b[j][1] <= cur:
                j += 1
            k = j
            while k < len(b) and b[k][0] < hi:
                if b[k][0] > cur:
                    out.append((cur, b[k][0]))
                cur = max(cur, b[k][1])
                if cur >= hi:
                    break
                k += 1
            if cur < hi:
                out.append((cur, hi))
        return IntervalSet(out, _trusted=True)

    def __or__(self, other):
        return self.union(other)

    def __and__(self, other):
        return self.intersect(other)

    def __sub__(self, other):
        return self.subtract(other)

    def leftmost(self, width) -> "IntervalSet":
        """The initial segment of measure ``width`` (in the set's own order)."""
        width = as_exact(width)
        if width > self.measure():
            raise GeometryError("requested width exceeds the set's measure")
        out = []
        for lo, hi in self.pieces:
            if width <= ZERO:
                break
            take = min(hi - lo, width)
            out.append((lo, lo + take))
            width = width - take
        return IntervalSet(out, _trusted=True)

    # -- serialization -------------------------------------------------
    def to_json(self) -> list:
        return [[str(lo), str(hi)] for lo, hi in self.pieces]

    @classmethod
    def from_json(cls, data: Sequence) -> "IntervalSet":
        return cls((parse_exact(lo), parse_exact(hi)) for lo, hi in data)


def _canonical(pieces: list) -> tuple:
    out: list = []
    for lo, hi in pieces:
        if out:
            plo, phi = out[-1]
            if lo < phi:
                raise GeometryError(f"overlapping intervals [{plo}, {phi}) and [{lo}, {hi})")
            if lo == phi:
                out[-1] = (plo, hi)
                continue
        out.append((lo, hi))
    return tuple(out)


class PiecewiseTranslation:
    """A finite partial bijection ``x -> x + shift`` on disjoint source intervals.

    Legs are stored sorted by source and adjacent legs with the same shift are
    merged, so equal maps have equal representations.
    """

    __slots__ = ("legs", "_los")

    def __init__(self, legs: Iterable = (), *, _trusted: bool = False):
        if _trusted:
            self.legs = tuple(legs)
        else:
            raw = []
            for lo, hi, s in legs:
                lo, hi = _pair((lo, hi))
                raw.append((lo, hi, as_exact(s)))
            raw.sort(key=lambda leg: leg[0])
            merged: list = []
            for leg in raw:
                if merged:
                    plo, phi, ps = merged[-1]
                    if leg[0] < phi:
                        raise GeometryError("overlapping source intervals")
                    if leg[0] == phi and leg[2] == ps:
                        merged[-1] = (plo, leg[1], ps)
                        continue
                merged.append(leg)
            self.legs = tuple(merged)
            # images must be disjoint as well
            images = sorted(((lo + s, hi + s) for lo, hi, s in self.legs), key=lambda p: p[0])
            for (alo, ahi), (blo, bhi) in zip(images, images[1:]):
                if blo < ahi:
                    raise GeometryError("overlapping image intervals")
        self._los = None

    @classmethod
    def identity(cls, s: IntervalSet) -> "PiecewiseTranslation":
        return cls(((lo, hi, ZERO) for lo, hi in s), _trusted=True)

    @classmethod
    def shift(cls, s: IntervalSet, amount) -> "PiecewiseTranslation":
        amount = as_exact(amount)
        return cls(((lo, hi, amount) for lo, hi in s), _trusted=True)

    def domain(self) -> IntervalSet:
        return IntervalSet(((lo, hi) for lo, hi, _ in self.legs))

    def range(self) -> IntervalSet:
        return IntervalSet(((lo + s, hi + s) for lo, hi, s in self.legs))

    def leg_index(self, x) -> int:
        if self._los is None:
            self._los = [leg[0] for leg in self.legs]
        i = bisect_right(self._los, x) - 1
        if i < 0 or not x < self.legs[i][1]:
            raise GeometryError(f"{x} outside the domain")
        return i

    def __call__(self, x) -> ExactNum:
        return x + self.legs[self.leg_index(x)][2]

    def __contains__(self, x) -> bool:
        try:
            self.leg_index(x)
        except GeometryError:
            return False
        return True

    def invert(self) -> "PiecewiseTranslation":
        return PiecewiseTranslation((lo + s, hi + s, -s) for lo, hi, s in self.legs)

    def legs_on(self, lo, hi) -> list:
        """The legs cut down to ``[lo, hi)``, as ``(lo, hi, shift)`` triples in order."""
        if self._los is None:
            self._los = [leg[0] for leg in self.legs]
        i = max(bisect_right(self._los, lo) - 1, 0)
        out = []
        legs = self.legs
        while i < len(legs) and legs[i][0] < hi:
            a, b, s = legs[i]
            a = lo if lo > a else a
            b = hi if hi < b else b
            if a < b:
                out.append((a, b, s))
            i += 1
        return out

    def restrict(self, s: IntervalSet) -> "PiecewiseTranslation":
        # a restriction of a valid map is valid, sorted and still merged
        legs = []
        for lo, hi in s:
            legs.extend(self.legs_on(lo, hi))
        return PiecewiseTranslation(legs, _trusted=True)

    def image(self, s: IntervalSet) -> IntervalSet:
        return self.restrict(s).range()

    def preimage(self, s: IntervalSet) -> IntervalSet:
        return self.invert().image(s)

    def compose(self, g: "PiecewiseTranslation") -> "PiecewiseTranslation":
        """``self o g`` on ``g^{-1}(domain(self))``."""
        legs = []
        for lo, hi, sg in g.legs:
            img = IntervalSet([(lo + sg, hi + sg)], _trusted=True)
            for flo, fhi, sf in self.legs:
                if fhi <= img.inf or flo >= img.sup:
                    continue
                a, b = max(flo, img.inf), min(fhi, img.sup)
                legs.append((a - sg, b - sg, sg + sf))
        return PiecewiseTranslation(legs)

    def __mul__(self, g):
        return self.compose(g)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseTranslation):
            return NotImplemented
        return self.legs == other.legs

    def __hash__(self):
        return hash(self.legs)

    def __len__(self):
        return len(self.legs)

    def __repr__(self):
        body = ", ".join(f"[{lo}, {hi})->{s}" for lo, hi, s in self.legs)
        return f"PiecewiseTranslation({body})"

    def to_json(self) -> list:
        return [[str(lo), str(hi), str(s)] for lo, hi, s in self.legs]

    @classmethod
    def from_json(cls, data) -> "PiecewiseTranslation":
        return cls((parse_exact(lo), parse_exact(hi), parse_exact(s)) for lo, hi, s in data)


def pack(s: IntervalSet, origin=ZERO) -> PiecewiseTranslation:
    """Order-preserving measure-preserving map of ``s`` onto ``[origin, origin + measure(s))``."""
    if s.is_empty():
        raise GeometryError("cannot pack an empty set")
    legs = []
    cursor = as_exact(origin)
    for lo, hi in s:
        legs.append((lo, hi, cursor - lo))
        cursor = cursor + (hi - lo)
    return PiecewiseTranslation(legs, _trusted=True)


def disagreement(f: PiecewiseTranslation, g: PiecewiseTranslation) -> ExactNum:
    """Exact measure of ``{x : f(x) != g(x)}`` for maps with a common domain."""
    if f.domain() != g.domain():
        raise GeometryError("disagreement needs maps with identical domains")
    total = ZERO
    a, b = f.legs, g.legs
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi and a[i][2] != b[j][2]:
            total = total + (hi - lo)
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total
