"""A discrete stand-in for skyscrapers: towers made of whole atoms.

Every base atom carries one full column of its origin tower; surgery marks
extra base levels in a column.  Return times are read off by scanning the
marks, so this shares no bookkeeping with the continuous engine and can be
used to cross-check it on commensurable examples.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .distribution import HeightDistribution
from .exact import ExactNum, as_exact

__all__ = ["AtomSystem", "AtomTower", "OracleError", "OracleReport", "compare_models", "discrete_expand_at", "discretize"]


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class AtomTower:
    height: int
    width: int  # number of base atoms


@dataclass
class AtomSystem:
    """Columns of atoms.  ``columns[i] = (height, marks)`` with ascending marks starting at 0."""

    unit: ExactNum
    columns: list = field(default_factory=list)
    permutation: tuple = ()

    @classmethod
    def from_towers(cls, towers, unit=1) -> "AtomSystem":
        cols = []
        for t in sorted(towers, key=lambda t: t.height):
            cols.extend((t.height, (0,)) for _ in range(t.width))
        # the induced map cycles the base atoms; it plays no role in the counts
        perm = tuple((i + 1) % len(cols) for i in range(len(cols)))
        return cls(as_exact(unit), cols, perm)

    def segments(self):
        """Yield ``(column, start, length)`` for every marked level, in column order."""
        for i, (h, marks) in enumerate(self.columns):
            for j, s in enumerate(marks):
                end = marks[j + 1] if j + 1 < len(marks) else h
                yield i, s, end - s

    def distribution(self) -> Counter:
        return Counter(length for _, _, length in self.segments())

    def atoms(self) -> int:
        return sum(self.distribution().values())

    def copy(self) -> "AtomSystem":
        return AtomSystem(self.unit, list(self.columns), self.permutation)


def discretize(dist: HeightDistribution, unit, height_cutoff: int) -> AtomSystem:
    """Atoms of width ``unit`` for every tower up to ``height_cutoff``; widths must be multiples of ``unit``."""
    unit = as_exact(unit)
    towers = []
    for h, w in dist.items_upto(height_cutoff):
        count = w / unit
        if count.b or count.a.denominator != 1:
            raise OracleError(f"width {w} at height {h} is not a multiple of {unit}")
        towers.append(AtomTower(h, int(count.a)))
    return AtomSystem.from_towers(towers, unit)


def discrete_expand_at(s: AtomSystem, n: int, lambda_n: int, future_bounds: Callable[[int], int] | Mapping[int, int]) -> AtomSystem:
    """One surgery step with everything counted in atoms."""
    bound = future_bounds.get if isinstance(future_bounds, Mapping) else future_bounds
    counts = s.distribution()
    need = lambda_n - counts[n]
    if need <= 0:
        raise OracleError("target does not exceed the current count")
    delta = min((bound(k) or 0) - counts[k] for k in range(n + 1, 2 * n + 1))
    if delta <= 0:
        raise OracleError("future bounds do not dominate")
    K = need // delta + 1
    start = K * n + n + 1
    tall = sorted((length, i, st) for i, st, length in s.segments() if length >= start)
    out = s.copy()
    acc = 0
    for length, i, st in tall:
        if acc >= need:
            break
        q = (length - n - 1) // n
        h, marks = out.columns[i]
        out.columns[i] = (h, tuple(sorted(set(marks) | {st + n * l for l in range(1, q + 1)})))
        acc += q
    if acc < need:
        raise OracleError("not enough tall columns")
    if acc > need:
        raise OracleError("target is not commensurable with the atom size")
    return out


@dataclass(frozen=True)
class OracleReport:
    agree: bool
    mismatches: tuple  # (height, continuous atoms, discrete atoms)

    def to_json(self) -> dict:
        return {"agree": self.agree, "mismatches": [[h, str(c), d] for h, c, d in self.mismatches]}


def compare_models(dist: HeightDistribution, system: AtomSystem, height_cutoff: int) -> OracleReport:
    counts = system.distribution()
    continuous = {h: w / system.unit for h, w in dist.items_upto(height_cutoff)}
    bad = []
    for h in sorted(set(continuous) | {h for h in counts if h <= height_cutoff}):
        c = continuous.get(h, ExactNum(0))
        if c != counts.get(h, 0):
            bad.append((h, c, counts.get(h, 0)))
    return OracleReport(not bad, tuple(bad))
