"""Moving whole intervals through skyscraper dynamics.

A piece is ``(height, level, lo, hi)``: the points of tower ``height`` at
``level`` whose base lies in ``[lo, hi)``, in the packed base line of the
part.  Pieces are kept inside a single tower slot, so the level is constant.

An interval reaching into a height tail would split into infinitely many
slots; everything past tail index ``TAIL_CUTOFF`` is lumped into one
unresolved piece ``(None, None, lo, hi)`` that callers must treat as unknown.
"""
from __future__ import annotations

from functools import lru_cache

from .dynamics import BudgetExceeded, ConservativePart, Induction
from .geometry import IntervalSet, PiecewiseTranslation

TAIL_CUTOFF = 20

__all__ = ["line_map", "split_slots", "shift_piece", "pieces_to_child", "pieces_from_root", "piece_measure", "unresolved"]


@lru_cache(maxsize=None)
def _line_maps(c: ConservativePart):
    fwd = c._to_line.compose(c.base_map.compose(c._from_line))
    return fwd, fwd.invert()


def line_map(c: ConservativePart, inverse: bool = False) -> PiecewiseTranslation:
    """The base map in packed line coordinates."""
    return _line_maps(c)[1 if inverse else 0]


def split_slots(c: ConservativePart, lo, hi, cutoff: int = TAIL_CUTOFF):
    """Cut a base-line interval at tower slot boundaries: ``[(height, lo, hi), ...]``."""
    out = []
    tail = c.heights.tail
    if tail is not None:
        stop = c.heights.explicit_total() + tail.cumulative(max(cutoff, tail.start))
        if stop < hi:
            if lo < stop:
                out = split_slots(c, lo, stop, cutoff)
            out.append((None, max(lo, stop), hi))
            return out
    while lo < hi:
        n = c.heights.height_at(lo)
        end = c.heights.layout_start(n) + c.heights.width(n)
        cut = end if end < hi else hi
        out.append((n, lo, cut))
        lo = cut
    return out


def _map_interval(f: PiecewiseTranslation, lo, hi):
    return f.image(IntervalSet.interval(lo, hi)).pieces


def shift_piece(c: ConservativePart, piece, m: int, budget: int = 100_000):
    """Image of a piece under ``T**m``, as a list of pieces."""
    out = []
    todo = [(piece, m)]
    while todo:
        budget -= 1
        if budget < 0:
            raise BudgetExceeded("piece iteration budget exhausted")
        (n, level, lo, hi), r = todo.pop()
        if n is None:
            out.append((None, None, lo, hi))
            continue
        if r >= 0:
            if level + r < n:
                out.append((n, level + r, lo, hi))
                continue
            r -= n - level
            for a, b in _map_interval(line_map(c), lo, hi):
                for n2, a2, b2 in split_slots(c, a, b):
                    todo.append(((n2, 0 if n2 else None, a2, b2), r))
        else:
            if level + r >= 0:
                out.append((n, level + r, lo, hi))
                continue
            r += level + 1
            for a, b in _map_interval(line_map(c, inverse=True), lo, hi):
                for n2, a2, b2 in split_slots(c, a, b):
                    todo.append(((n2, n2 - 1 if n2 else None, a2, b2), r))
    return out


def pieces_to_child(ind: Induction, piece, budget: int = 100_000):
    """Re-express a parent piece in the coordinates of the induced child."""
    parent, child = ind.parent, ind.child
    sub_line = parent._to_line.image(ind.sub_base)
    # child base line coordinate of a parent base-line point in the sub-base
    to_child_line = child._to_line.compose(ind.phi.compose(parent._from_line.restrict(sub_line)))
    n, level, lo, hi = piece
    if n is None:
        return [piece]
    out = []
    todo = [(lo, hi, level)]
    while todo:
        budget -= 1
        if budget < 0:
            raise BudgetExceeded("backward excursion budget exhausted")
        a, b, acc = todo.pop()
        part = IntervalSet.interval(a, b)
        inside = part & sub_line
        for x, y in inside:
            for u, v in _map_interval(to_child_line, x, y):
                for h, u2, v2 in split_slots(child, u, v):
                    out.append((h, acc if h else None, u2, v2))
        for x, y in part - sub_line:
            for u, v in _map_interval(line_map(parent, inverse=True), x, y):
                for h, u2, v2 in split_slots(parent, u, v):
                    if h is None:
                        out.append((None, None, u2, v2))
                    else:
                        todo.append((u2, v2, acc + h))
    return out


def pieces_from_root(part: ConservativePart, piece):
    """Root-coordinate piece to pieces of ``part`` (through the induction chain)."""
    chain = []
    cur = part
    while cur.origin is not None:
        chain.append(cur.origin)
        cur = cur.origin.parent
    pieces = [piece]
    for ind in reversed(chain):
        pieces = [q for p in pieces for q in pieces_to_child(ind, p)]
    return pieces


def unresolved(pieces):
    return [p for p in pieces if p[0] is None]


def piece_measure(pieces):
    total = None
    for _, _, lo, hi in pieces:
        total = hi - lo if total is None else total + (hi - lo)
    return total if total is not None else IntervalSet().measure()
