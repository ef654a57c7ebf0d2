"""Rokhlin sets and the reference probability measure on a model space.

A Rokhlin set of order ``N`` selects, in every tower of height ``n >= N``,
the base pieces at levels ``0, N, 2N, ...`` that still have ``N - 1`` levels
above them inside the tower; on a shift component it selects every ``N``-th
fundamental cell.  Its ``N`` translates are disjoint and leave uncovered the
top ``n mod N`` levels of each tower.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .distribution import HeightDistribution
from .dynamics import BudgetExceeded, ConservativePart, ConservativePoint, DissipativePoint, ModelError, Transformation, shrink_base
from .exact import INFINITY, ExactNum, as_exact
from .geometry import IntervalSet
from .pieces import pieces_from_root, shift_piece

__all__ = ["MuWeights", "RokhlinSet", "Trim", "mu_measure", "rokhlin_set"]

ZERO = ExactNum(0)
ONE = ExactNum(1)
TRIM_SEARCH = 4096  # tail towers examined when placing a trim


@dataclass(frozen=True)
class Trim:
    """Width ``t`` removed from the right of ``count`` consecutive blocks of the base.

    For ``kind == "tower"`` the blocks are ``q0 .. q`` in the tower of height
    ``n``; for ``kind == "shift"`` it is the cell ``[0, d)`` of component
    ``label`` (and ``count`` is 1).
    """

    n: int
    q: int
    t: ExactNum
    kind: str = "tower"
    label: Optional[str] = None
    count: int = 1

    @property
    def q0(self) -> int:
        return self.q - self.count + 1

    @property
    def mass(self) -> ExactNum:
        return self.t * self.count

    def covers(self, n: int, level: int, N: int) -> bool:
        return self.kind == "tower" and self.n == n and self.q0 * N <= level < (self.q + 1) * N


def _row_line(dist: HeightDistribution, lo_height: int) -> IntervalSet:
    """Base-line positions of all slots with height >= lo_height."""
    cum = dist._explicit_cum()
    E = cum[-1]
    i = bisect_left(dist._heights, lo_height)
    pieces = [(cum[i], E)] if cum[i] < E else []
    if dist.tail is not None:
        j = dist.tail.first_index_at_least(lo_height)
        pieces.append((E + dist.tail.cumulative(j), E + dist.tail.total()))
    return IntervalSet(pieces)


class RokhlinSet:
    """Rokhlin set of order ``N`` on a transformation, in the coordinates of ``part``."""

    def __init__(self, N: int, part: Optional[ConservativePart], components, tail_width=None, trim: Optional[Trim] = None):
        if N < 1:
            raise ModelError("N must be at least 1")
        self.N = N
        self.part = part
        self.components = tuple(components)
        self.tail_width = tail_width
        self.trim = trim

    # -- selection -------------------------------------------------------
    def blocks(self, n: int) -> int:
        return n // self.N

    def selected_levels(self, n: int) -> tuple:
        return tuple(q * self.N for q in range(self.blocks(n)))

    def conservative_selection(self, max_height: int):
        """``(height, selected levels, base slot on the line)`` for towers up to ``max_height``."""
        out = []
        for n, w in self.part.heights.items_upto(max_height):
            lo, hi = self.part.layout_line(n)
            out.append((n, self.selected_levels(n), IntervalSet.interval(lo, hi)))
        return out

    def dissipative_selection(self, tail_count: int = 0):
        """``(label, pattern inside [0, N*d), period N*d)`` per component."""
        out = []
        labels = list(self.components)
        labels += [(f"tail:{k}", self.tail_width) for k in range(tail_count if self.tail_width is not None else 0)]
        for label, d in labels:
            out.append((label, IntervalSet.interval(0, d), d * self.N))
        return out

    def translate_levels(self, n: int, k: int) -> IntervalSet:
        """Levels of tower ``n`` (as unit intervals) covered by the ``k``-th translate."""
        return IntervalSet([(L + k, L + k + 1) for L in self.selected_levels(n)])

    def translate_pattern(self, d, k: int) -> IntervalSet:
        return IntervalSet.interval(d * k, d * (k + 1))

    def check_disjoint(self, max_height: int, tail_count: int = 2) -> bool:
        """Exact emptiness of all pairwise intersections of the ``N`` translates."""
        N = self.N
        if self.part is not None:
            for n, _ in self.part.heights.items_upto(max_height):
                sets = [self.translate_levels(n, k) for k in range(N)]
                for a in range(N):
                    for b in range(a + 1, N):
                        if not (sets[a] & sets[b]).is_empty():
                            return False
        for _, pattern, period in self.dissipative_selection(tail_count):
            d = pattern.sup
            sets = [self.translate_pattern(d, k) for k in range(N)]
            for a in range(N):
                if not sets[a].subtract(IntervalSet.interval(0, period)).is_empty():
                    return False
                for b in range(a + 1, N):
                    if not (sets[a] & sets[b]).is_empty():
                        return False
        return True

    # -- measures ------------------------------------------------------------
    def complement_measure(self) -> ExactNum:
        # trimming only removes points, so it cannot break disjointness
        comp = self.part.heights.mod_sum(self.N) if self.part is not None else ZERO
        if self.trim is not None:
            comp = comp + self.trim.mass * self.N
        return comp

    def window(self, max_height: int):
        """``(window measure, N * selected measure, complement measure)`` over towers up to ``max_height``."""
        total = sel = comp = ZERO
        N = self.N
        for n, w in self.part.heights.items_upto(max_height):
            total = total + w * n
            sel = sel + w * (N * self.blocks(n))
            comp = comp + w * (n % N)
        if self.trim is not None and self.trim.kind == "tower" and self.trim.n <= max_height:
            sel = sel - self.trim.mass * N
            comp = comp + self.trim.mass * N
        return total, sel, comp

    def with_trim(self, defect) -> "RokhlinSet":
        """Enlarge the complement by exactly ``defect`` by trimming one top block."""
        defect = as_exact(defect)
        if not defect:
            return self
        if self.trim is not None:
            raise ModelError("already trimmed")
        t = defect / self.N
        if self.part is None:
            for label, d in self.components:
                if d > t:
                    return RokhlinSet(self.N, None, self.components, self.tail_width, Trim(0, 0, t, "shift", label))
            if self.tail_width is not None and self.tail_width > t:
                return RokhlinSet(self.N, None, self.components, self.tail_width, Trim(0, 0, t, "shift", "tail:0"))
            raise ModelError("no component wide enough to trim")
        # one block of one tower when some tower is wide enough, else the
        # top blocks of a tower holding enough mass, at a smaller width
        dist = self.part.heights

        def candidates(narrowest=None):
            for n, w in dist.explicit.items():
                if n >= self.N:
                    yield n, w
            if dist.tail is not None:
                for j in range(dist.tail.start, dist.tail.start + TRIM_SEARCH):
                    n, w = dist.tail.height(j), dist.tail.width(j)
                    if narrowest is not None and w < narrowest:
                        return  # tail widths only decrease
                    if n >= self.N:
                        yield n, w

        for n, w in candidates(t):
            if w >= t:
                return RokhlinSet(self.N, self.part, self.components, self.tail_width, Trim(n, self.blocks(n) - 1, t))
        for n, w in candidates():
            blocks = self.blocks(n)
            if w * blocks >= t:
                count = int((t / w).floor())
                if w * count < t:
                    count += 1
                trim = Trim(n, blocks - 1, t / count, count=count)
                return RokhlinSet(self.N, self.part, self.components, self.tail_width, trim)
        raise ModelError("no tower wide enough to trim")

    # -- membership ------------------------------------------------------------
    def _trimmed(self, n: int, level: int, u) -> bool:
        tr = self.trim
        if tr is None or not tr.covers(n, level, self.N):
            return False
        return u >= self.part.heights.width(n) - tr.t

    def floor_of(self, p):
        """``(j, base point)`` when ``p`` lies on floor ``j`` over the base point, else ``None``."""
        N = self.N
        if isinstance(p, DissipativePoint):
            d = self._width(p.label)
            m = (p.x / d).floor()
            j = m % N
            if self.shift_trimmed(p.label, m, p.x - d * m):
                return None
            return j, DissipativePoint(p.label, p.x - d * j)
        n, level = p.height, p.level
        if level >= N * self.blocks(n):
            return None
        if self._trimmed(n, level, self.part.offset_in_tower(p)):
            return None
        j = level % N
        return j, ConservativePoint(n, level - j, p.x)

    def shift_trimmed(self, label, cell: int, offset) -> bool:
        """Whether offset ``offset`` of cell ``cell`` of a component was trimmed away."""
        tr = self.trim
        if tr is None or tr.kind != "shift" or tr.label != label or not 0 <= cell < self.N:
            return False
        return offset >= self._width(label) - tr.t

    def _width(self, label):
        for lab, d in self.components:
            if lab == label:
                return d
        if self.tail_width is not None and label.startswith("tail:"):
            return self.tail_width
        raise ModelError(f"unknown component {label!r}")

    # -- piece predicates (for measuring sets cell by cell) --------------------
    def complement_part(self, piece) -> ExactNum:
        """Measure of a part-coordinate piece lying in the complement (unknown pieces count fully)."""
        n, level, lo, hi = piece
        if n is None or level >= self.N * self.blocks(n):
            return hi - lo
        return self._trim_overlap(n, level, lo, hi)

    def base_part(self, piece) -> ExactNum:
        """Measure of a piece lying in the Rokhlin base (unknown pieces count fully)."""
        n, level, lo, hi = piece
        if n is None:
            return hi - lo
        if level % self.N or level >= self.N * self.blocks(n):
            return ZERO
        return (hi - lo) - self._trim_overlap(n, level, lo, hi)

    def _trim_overlap(self, n, level, lo, hi) -> ExactNum:
        tr = self.trim
        if tr is None or not tr.covers(n, level, self.N):
            return ZERO
        cut = self.part.layout_line(n)[1] - tr.t
        a = lo if lo > cut else cut
        return hi - a if a < hi else ZERO

    # -- packings used by the conjugacy constructions --------------------------
    def row_line(self, q: int) -> IntervalSet:
        """Block ``q`` of every tower as one line set (minus the trim)."""
        row = _row_line(self.part.heights, self.N * (q + 1))
        tr = self.trim
        if tr is not None and tr.kind == "tower" and tr.q0 <= q <= tr.q:
            end = self.part.layout_line(tr.n)[1]
            row = row - IntervalSet.interval(end - tr.t, end)
        return row

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "complement": str(self.complement_measure()),
            "base_measure": str(self.part.base_measure) if self.part is not None else None,
            "heights": self.part.heights.to_json() if self.part is not None else None,
            "components": [[label, str(d)] for label, d in self.components],
            "tail_width": str(self.tail_width) if self.tail_width is not None else None,
            "trim": None if self.trim is None else {
                "kind": self.trim.kind, "height": self.trim.n, "block": self.trim.q,
                "label": self.trim.label, "width": str(self.trim.t), "count": self.trim.count,
            },
        }


def rokhlin_set(T: Transformation, N: int, eps, budget: int = 100_000) -> RokhlinSet:
    """Rokhlin set of order ``N`` leaving a complement of measure below ``eps``.

    The base is shrunk below ``eps / N`` only when the given towers leave too
    much uncovered.
    """
    eps = as_exact(eps)
    if N < 1:
        raise ModelError("N must be at least 1")
    if not eps > 0:
        raise ModelError("epsilon must be positive")
    if not T.aperiodic:
        raise ModelError("transformation is not aperiodic")
    part = T.conservative
    if part is not None and not part.heights.mod_sum(N) < eps:
        part = shrink_base(part, eps / N, budget)
    dis = T.dissipative
    rs = RokhlinSet(N, part, dis.components, dis.infinite_tail)
    if not rs.complement_measure() < eps:
        raise BudgetExceeded("complement did not drop below epsilon")
    return rs


# ---------------------------------------------------------------------------
# reference probability measure


class MuWeights:
    """A probability measure equivalent to Lebesgue measure on a model space.

    Cells are the tower levels ``(tower index i, level L)`` of the given
    presentation and the fundamental cells ``[k*d, (k+1)*d)`` of each shift
    component.  They are listed by rank: tower cells with ``i + L = r``, then
    component cells with ``c + z = r`` where ``z`` runs through ``k = 0, -1, 1,
    -2, ...``.  Cell ``j`` gets mass ``2**-(j+1)`` spread uniformly (the last
    cell of a finite list takes the remainder).
    """

    def __init__(self, T: Transformation):
        self.T = T
        part = T.conservative
        self.part = part
        self.dist = part.heights if part is not None else None
        self._explicit = list(self.dist.explicit.items()) if part is not None else []
        dis = T.dissipative
        self.components = list(dis.components)
        self.tail_width = dis.infinite_tail
        self._total = self._count_cells()

    # -- cell bookkeeping ------------------------------------------------------
    def tower(self, i: int):
        """``(height, width)`` of the tower with layout index ``i`` or ``None``."""
        if i < len(self._explicit):
            return self._explicit[i]
        if self.dist is None or self.dist.tail is None:
            return None
        j = self.dist.tail.start + i - len(self._explicit)
        return self.dist.tail.height(j), self.dist.tail.width(j)

    def tower_index(self, n: int) -> int:
        if n in self.dist.explicit:
            return [h for h, _ in self._explicit].index(n)
        j = self.dist.tail.index_of(n) if self.dist.tail is not None else None
        if j is None:
            raise ModelError(f"no tower of height {n}")
        return len(self._explicit) + j - self.dist.tail.start

    def component(self, c: int):
        if c < len(self.components):
            return self.components[c]
        if self.tail_width is not None:
            return f"tail:{c - len(self.components)}", self.tail_width
        return None

    def component_index(self, label: str) -> int:
        for c, (lab, _) in enumerate(self.components):
            if lab == label:
                return c
        if self.tail_width is not None and label.startswith("tail:"):
            return len(self.components) + int(label[5:])
        raise ModelError(f"unknown component {label!r}")

    @staticmethod
    def zigzag(z: int) -> int:
        return -((z + 1) // 2) if z % 2 else z // 2

    @staticmethod
    def unzigzag(k: int) -> int:
        return 2 * k if k >= 0 else -2 * k - 1

    def _count_cells(self):
        if self.components or self.tail_width is not None:
            return None
        if self.dist.tail is not None:
            return None
        return sum(h for h, _ in self._explicit)

    @property
    def total_cells(self):
        """Number of cells, or ``None`` when there are infinitely many."""
        return self._total

    def rank_cells(self, r: int):
        """Cells of rank ``r`` in order, as descriptors with their measure."""
        out = []
        if self.part is not None:
            for i in range(r + 1):
                t = self.tower(i)
                if t is None:
                    break
                h, w = t
                if r - i < h:
                    out.append((("tower", h, r - i), w))
        for c in range(r + 1):
            comp = self.component(c)
            if comp is None:
                break
            label, d = comp
            out.append((("shift", label, self.zigzag(r - c)), d))
        return out

    def _count_before_rank(self, r: int) -> int:
        count = 0
        if self.part is not None:
            for i in range(r):
                t = self.tower(i)
                if t is None:
                    break
                count += min(t[0], r - i)
        for c in range(r):
            if self.component(c) is None:
                break
            count += r - c
        return count

    def index(self, cell) -> int:
        kind = cell[0]
        if kind == "tower":
            _, n, L = cell
            i = self.tower_index(n)
            if not 0 <= L < n:
                raise ModelError("level outside the tower")
            r = i + L
            j = self._count_before_rank(r)
            for i2 in range(i):
                if r - i2 < self.tower(i2)[0]:
                    j += 1
            return j
        _, label, k = cell
        c = self.component_index(label)
        r = c + self.unzigzag(k)
        j = self._count_before_rank(r)
        if self.part is not None:
            for i in range(r + 1):
                t = self.tower(i)
                if t is None:
                    break
                if r - i < t[0]:
                    j += 1
        return j + c

    def weight(self, j: int) -> ExactNum:
        if self._total is not None:
            if j >= self._total:
                raise ModelError("cell index out of range")
            if j == self._total - 1:
                return ExactNum(Fraction(1, 2 ** (self._total - 1)))
        return ExactNum(Fraction(1, 2 ** (j + 1)))

    def tail_mass(self, J: int) -> ExactNum:
        """Total mass of the cells with index ``>= J``."""
        if self._total is not None and J >= self._total:
            return ZERO
        return ExactNum(Fraction(1, 2**J))

    def window(self, J: int):
        """The first ``J`` cells as ``(index, descriptor, measure, weight)``."""
        out = []
        r = 0
        while len(out) < J:
            cells = self.rank_cells(r)
            if not cells and self._total is not None and len(out) >= self._total:
                break
            for cell, lam in cells:
                if len(out) >= J:
                    break
                j = len(out)
                out.append((j, cell, lam, self.weight(j)))
            r += 1
            if self._total is not None and len(out) >= self._total:
                break
        return out

    def cell_piece(self, cell):
        """The cell as a root-coordinate piece (towers) or line interval (components)."""
        if cell[0] == "tower":
            _, n, L = cell
            lo, hi = self.part.layout_line(n)
            return n, L, lo, hi
        _, label, k = cell
        d = self.T.dissipative.width(label)
        return label, d * k, d * (k + 1)

    # -- measuring sets ----------------------------------------------------------
    def upper_measure(self, J: int, tower_part, shift_part) -> tuple[ExactNum, ExactNum]:
        """Exact window value and an exact upper bound for a set given cellwise.

        ``tower_part(piece)`` and ``shift_part(label, lo, hi)`` return the
        measure of the set inside a cell; cells past the window count fully.
        """
        value = ZERO
        for j, cell, lam, wt in self.window(J):
            if cell[0] == "tower":
                inside = tower_part(self.cell_piece(cell))
            else:
                inside = shift_part(*self.cell_piece(cell))
            if inside:
                value = value + wt * (inside / lam)
        return value, value + self.tail_mass(J)


def mu_measure(w: MuWeights, region) -> ExactNum:
    """Exact mu-measure of a finitely presented region.

    ``region`` is ``"whole"`` or a list of items ``("cell", j)``,
    ``("cell", j, a, b)`` (the fraction ``[a, b)`` of cell ``j``),
    ``("tower", n, L, lo, hi)`` (base-line interval of level ``L`` in tower ``n``)
    or ``("shift", label, lo, hi)`` (an interval of a shift component).
    Items must not overlap.
    """
    if region == "whole":
        return ONE
    total = ZERO
    for item in region:
        kind = item[0]
        if kind == "cell":
            j = item[1]
            a, b = (as_exact(item[2]), as_exact(item[3])) if len(item) == 4 else (ZERO, ONE)
            if not ZERO <= a <= b <= ONE:
                raise ModelError("cell fraction outside [0, 1]")
            total = total + w.weight(j) * (b - a)
        elif kind == "tower":
            _, n, L, lo, hi = item
            slo, shi = w.part.layout_line(n)
            lo, hi = as_exact(lo), as_exact(hi)
            if not slo <= lo <= hi <= shi:
                raise ModelError("interval outside the tower slot")
            total = total + w.weight(w.index(("tower", n, L))) * ((hi - lo) / (shi - slo))
        elif kind == "shift":
            _, label, lo, hi = item
            d = w.T.dissipative.width(label)
            lo, hi = as_exact(lo), as_exact(hi)
            k = (lo / d).floor()
            while d * k < hi:
                a = lo if lo > d * k else d * k
                b = hi if hi < d * (k + 1) else d * (k + 1)
                if a < b:
                    total = total + w.weight(w.index(("shift", label, k))) * ((b - a) / d)
                k += 1
        else:
            raise ModelError(f"unsupported region item {kind!r}")
    return total
