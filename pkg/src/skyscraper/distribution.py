"""Height distributions: finitely many explicit towers plus a geometric tail.

A distribution maps a tower height ``n`` to the total width (base measure)
of the towers of that height.  The tail contributes entries
``(n0 * g**j + offset, w0 * r**j)`` for ``j >= start``; all range sums used by
the constructions have closed forms over the tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional

from .exact import INFINITY, ExactNum, as_exact, parse_exact

__all__ = ["GeometricTail", "HeightDistribution", "TargetSequence", "DistributionError"]

ZERO = ExactNum(0)


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class GeometricTail:
    n0: int
    g: int
    w0: ExactNum
    r: Fraction
    offset: int = 0
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "w0", as_exact(self.w0))
        object.__setattr__(self, "r", Fraction(self.r))
        if self.n0 < 1 or self.g < 2:
            raise DistributionError("tail needs n0 >= 1 and g >= 2")
        if not (0 < self.r < 1):
            raise DistributionError("tail ratio must lie in (0, 1)")
        if not self.w0 > 0:
            raise DistributionError("tail start width must be positive")
        if self.start < 0 or self.height(self.start) < 1:
            raise DistributionError("tail heights must be positive")
        object.__setattr__(self, "_rem", {})

    def height(self, j: int) -> int:
        return self.n0 * self.g**j + self.offset

    def width(self, j: int) -> ExactNum:
        return self.w0 * self.r**j

    @property
    def first_height(self) -> int:
        return self.height(self.start)

    def remaining(self, j: int) -> ExactNum:
        """Total width of entries ``j, j+1, ...``."""
        cache = self._rem
        v = cache.get(j)
        if v is None:
            v = self.w0 * (self.r**j / (1 - self.r))
            if len(cache) < 4096:
                cache[j] = v
        return v

    def total(self) -> ExactNum:
        return self.remaining(self.start)

    def cumulative(self, j: int) -> ExactNum:
        """Total width of entries ``start .. j-1``."""
        return self.total() - self.remaining(j)

    @property
    def infinite_mass(self) -> bool:
        return self.g * self.r >= 1

    def index_of(self, n: int) -> Optional[int]:
        q, rem = divmod(n - self.offset, self.n0)
        if rem or q < 1:
            return None
        j = 0
        while q % self.g == 0:
            q //= self.g
            j += 1
        if q != 1 or j < self.start:
            return None
        return j

    def first_index_at_least(self, n: int) -> int:
        j = self.start
        while self.height(j) < n:
            j += 1
        return j

    def index_at_position(self, t: ExactNum) -> int:
        """Entry whose layout slot contains ``t`` (measured from the tail's left end)."""
        total = self.total()
        if t < 0 or not t < total:
            raise DistributionError("position outside the tail")
        rest = total - t  # need remaining(j) >= rest > remaining(j+1)

        def ok(j):
            return self.remaining(j) >= rest

        # float estimate of the answer, confirmed exactly below
        guess = self.start
        try:
            x = float(rest) * float(1 - self.r) / float(self.w0)
            if rest._approx() is None or abs(float(rest)) < 8 * rest._approx()[1]:
                x = 0  # float value dominated by cancellation
            if x > 0:
                guess = max(self.start, int(math.log(x) / math.log(float(self.r))))
        except (OverflowError, ValueError, ZeroDivisionError):
            pass
        for j in (guess, guess - 1, guess + 1):
            if j >= self.start and ok(j) and not ok(j + 1):
                return j
        lo, step = self.start, 1
        while ok(lo + step):
            lo += step
            step *= 2
        hi = lo + step  # ok(lo) true, ok(hi) false
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def advanced(self, j: int) -> "GeometricTail":
        return GeometricTail(self.n0, self.g, self.w0, self.r, self.offset, j)

    def shifted(self, extra: int) -> "GeometricTail":
        return GeometricTail(self.n0, self.g, self.w0, self.r, self.offset + extra, self.start)

    def mass(self) -> ExactNum:
        """Sum of height * width over the tail (finite tails only)."""
        if self.infinite_mass:
            raise DistributionError("tail mass diverges")
        gr = self.g * self.r
        s = self.start
        return self.w0 * (self.n0 * gr**s / (1 - gr)) + self.w0 * (self.offset * self.r**s / (1 - self.r))

    def mod_sum(self, N: int) -> ExactNum:
        """Sum of (height mod N) * width over the tail, via eventual periodicity."""
        seen: dict[int, int] = {}
        values: list[int] = []
        u = (self.n0 * pow(self.g, self.start, N)) % N
        j = 0
        while u not in seen:
            seen[u] = j
            values.append((u + self.offset) % N)
            u = (u * self.g) % N
            j += 1
        p0 = seen[u]
        period = j - p0
        total = ZERO
        for i in range(p0):
            total = total + self.width(self.start + i) * values[i]
        cycle = ZERO
        for i in range(period):
            cycle = cycle + self.width(self.start + p0 + i) * values[p0 + i]
        return total + cycle / (1 - self.r**period)

    def floor_div_sum(self, N: int) -> ExactNum:
        """Sum of floor(height / N) * width (finite tails only)."""
        return (self.mass() - self.mod_sum(N)) / N

    def to_json(self) -> dict:
        return {
            "n0": self.n0,
            "g": self.g,
            "w0": str(self.w0),
            "r": str(self.r),
            "offset": self.offset,
            "start": self.start,
        }

    @classmethod
    def from_json(cls, data) -> "GeometricTail":
        return cls(
            int(data["n0"]),
            int(data["g"]),
            parse_exact(data["w0"]),
            Fraction(data["r"]),
            int(data.get("offset", 0)),
            int(data.get("start", 0)),
        )


class HeightDistribution:
    """Map height -> width with an optional :class:`GeometricTail`.

    Layout order (used to place towers on the base) is: explicit heights in
    ascending order, then tail entries by index.
    """

    __slots__ = ("explicit", "tail", "_heights", "_cum")

    def __init__(self, explicit: Mapping[int, object] = (), tail: Optional[GeometricTail] = None):
        items = dict(explicit)
        clean: dict[int, ExactNum] = {}
        for n, w in items.items():
            n = int(n)
            w = as_exact(w)
            if n < 1:
                raise DistributionError(f"height {n} must be positive")
            if w < 0:
                raise DistributionError(f"negative width at height {n}")
            if w:
                clean[n] = w
        if tail is not None:
            for n in clean:
                if tail.index_of(n) is not None:
                    raise DistributionError(f"explicit height {n} collides with the tail")
        self.explicit = dict(sorted(clean.items()))
        self.tail = tail
        self._heights = list(self.explicit)
        self._cum = None

    # -- basic queries ---------------------------------------------------
    def width(self, n: int) -> ExactNum:
        w = self.explicit.get(n)
        if w is not None:
            return w
        if self.tail is not None:
            j = self.tail.index_of(n)
            if j is not None:
                return self.tail.width(j)
        return ZERO

    __getitem__ = width

    def explicit_total(self) -> ExactNum:
        total = ZERO
        for w in self.explicit.values():
            total = total + w
        return total

    def total_width(self) -> ExactNum:
        total = self.explicit_total()
        if self.tail is not None:
            total = total + self.tail.total()
        return total

    @property
    def infinite_total_measure(self) -> bool:
        return self.tail is not None and self.tail.infinite_mass

    def mass(self):
        """Sum of n * w_n: the measure of the saturated space (may be INFINITY)."""
        if self.infinite_total_measure:
            return INFINITY
        total = ZERO
        for n, w in self.explicit.items():
            total = total + w * n
        if self.tail is not None:
            total = total + self.tail.mass()
        return total

    def mod_sum(self, N: int) -> ExactNum:
        total = ZERO
        for n, w in self.explicit.items():
            total = total + w * (n % N)
        if self.tail is not None:
            total = total + self.tail.mod_sum(N)
        return total

    def max_explicit_height(self) -> int:
        return self._heights[-1] if self._heights else 0

    def heights_from(self, lo: int) -> Iterator[int]:
        """All heights >= lo carrying positive width, ascending (possibly infinite)."""
        from bisect import bisect_left

        i = bisect_left(self._heights, lo)
        j = self.tail.first_index_at_least(lo) if self.tail is not None else None
        while True:
            e = self._heights[i] if i < len(self._heights) else None
            t = self.tail.height(j) if j is not None else None
            if e is None and t is None:
                return
            if t is None or (e is not None and e < t):
                yield e
                i += 1
            else:
                yield t
                j += 1

    def items_upto(self, hmax: int) -> list[tuple[int, ExactNum]]:
        out = []
        for n in self.heights_from(1):
            if n > hmax:
                break
            out.append((n, self.width(n)))
        return out

    def is_tail_height(self, n: int) -> bool:
        return n not in self.explicit and self.tail is not None and self.tail.index_of(n) is not None

    # -- layout --------------------------------------------------------
    def _explicit_cum(self) -> list[ExactNum]:
        if self._cum is None:
            cum = [ZERO]
            for n in self._heights:
                cum.append(cum[-1] + self.explicit[n])
            self._cum = cum
        return self._cum

    def layout_start(self, n: int) -> ExactNum:
        """Left end of the layout slot of height ``n`` on ``[0, total_width)``."""
        if n in self.explicit:
            return self._explicit_cum()[self._heights.index(n)]
        j = self.tail.index_of(n) if self.tail is not None else None
        if j is None:
            raise DistributionError(f"no towers of height {n}")
        return self._explicit_cum()[-1] + self.tail.cumulative(j)

    def height_at(self, t: ExactNum) -> int:
        """Height of the tower whose layout slot contains position ``t``."""
        from bisect import bisect_right

        cum = self._explicit_cum()
        if t < cum[-1]:
            if t < 0:
                raise DistributionError("negative layout position")
            return self._heights[bisect_right(cum, t) - 1]
        if self.tail is None:
            raise DistributionError("layout position beyond the base")
        return self.tail.height(self.tail.index_at_position(t - cum[-1]))

    # -- derived distributions -----------------------------------------
    def materialized(self, upto_height: int) -> "HeightDistribution":
        """Same distribution with all tail entries of height <= upto_height made explicit."""
        if self.tail is None or self.tail.first_height > upto_height:
            return self
        j = self.tail.start
        extra = dict(self.explicit)
        while self.tail.height(j) <= upto_height:
            extra[self.tail.height(j)] = self.tail.width(j)
            j += 1
        return HeightDistribution(extra, self.tail.advanced(j))

    def __eq__(self, other):
        if not isinstance(other, HeightDistribution):
            return NotImplemented
        return self.explicit == other.explicit and self.tail == other.tail

    def __repr__(self):
        body = ", ".join(f"{n}: {w}" for n, w in self.explicit.items())
        return f"HeightDistribution({{{body}}}, tail={self.tail})"

    def to_json(self) -> dict:
        return {
            "explicit": [[n, str(w)] for n, w in self.explicit.items()],
            "tail": self.tail.to_json() if self.tail is not None else None,
        }

    @classmethod
    def from_json(cls, data) -> "HeightDistribution":
        tail = GeometricTail.from_json(data["tail"]) if data.get("tail") else None
        return cls({int(n): parse_exact(w) for n, w in data["explicit"]}, tail)


@dataclass(frozen=True)
class TargetSequence:
    """Target masses ``t(n) = sum_i floor_i(n) + headroom * 2**-n`` with overrides.

    Summing the floors (rather than taking their maximum) keeps every target
    strictly above each floor while the grand total stays a closed form.
    """

    floors: tuple = ()
    headroom: ExactNum = ZERO
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "headroom", as_exact(self.headroom))
        object.__setattr__(self, "overrides", {int(k): as_exact(v) for k, v in dict(self.overrides).items()})
        if self.headroom < 0:
            raise DistributionError("headroom must be nonnegative")

    def default(self, n: int) -> ExactNum:
        total = self.headroom * Fraction(1, 2**n)
        for f in self.floors:
            total = total + f.width(n)
        return total

    def __call__(self, n: int) -> ExactNum:
        v = self.overrides.get(n)
        return v if v is not None else self.default(n)

    def total(self) -> ExactNum:
        total = self.headroom
        for f in self.floors:
            total = total + f.total_width()
        for n, v in self.overrides.items():
            total = total + (v - self.default(n))
        return total

    def check_dominates(self, dist: HeightDistribution) -> None:
        """Raise unless ``self(n) > dist(n)`` for every height ``n >= 1``."""
        for n in list(dist.explicit) + list(self.overrides):
            if not self(n) > dist.width(n):
                raise DistributionError(f"target at height {n} does not strictly exceed {dist.width(n)}")
        if self.headroom <= 0:
            raise DistributionError("zero headroom cannot dominate infinitely many heights")
        if dist.tail is not None and not any(_covers(f, dist) for f in self.floors):
            raise DistributionError("cannot certify domination on the tail")

    def to_json(self) -> dict:
        return {
            "floors": [f.to_json() for f in self.floors],
            "headroom": str(self.headroom),
            "overrides": [[n, str(v)] for n, v in sorted(self.overrides.items())],
        }

    @classmethod
    def from_json(cls, data) -> "TargetSequence":
        return cls(
            tuple(HeightDistribution.from_json(f) for f in data["floors"]),
            parse_exact(data["headroom"]),
            {int(n): parse_exact(v) for n, v in data["overrides"]},
        )


def _covers(floor: HeightDistribution, dist: HeightDistribution) -> bool:
    """True when every tail entry of ``dist`` is matched by ``floor``."""
    t = dist.tail
    if floor.tail == t:
        return True
    # tails that started at the same schema but were advanced differently
    f = floor.tail
    if f is None:
        return False
    same = (f.n0, f.g, f.w0, f.r, f.offset) == (t.n0, t.g, t.w0, t.r, t.offset)
    if not same:
        return False
    # entries of dist's tail below f.start must be explicit in floor
    return all(floor.width(t.height(j)) >= t.width(j) for j in range(t.start, f.start))
