"""Interval sets and piecewise translations against a grid-membership oracle."""
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper.exact import ExactNum, golden
from skyscraper.geometry import GeometryError, IntervalSet, PiecewiseTranslation, disagreement, pack

GRID = 64  # endpoints on multiples of 1/8 in [0, 8]


@st.composite
def grid_sets(draw):
    cells = draw(st.lists(st.booleans(), min_size=GRID, max_size=GRID))
    return cells


def to_set(cells):
    return IntervalSet([(F(i, 8), F(i + 1, 8)) for i, on in enumerate(cells) if on])


def oracle_members(s):
    # membership of every cell midpoint; each cell is entirely in or out
    return [F(2 * i + 1, 16) in s for i in range(GRID)]


@settings(max_examples=150, deadline=None)
@given(grid_sets(), grid_sets())
def test_boolean_algebra(a, b):
    A, B = to_set(a), to_set(b)
    assert oracle_members(A.union(B)) == [x or y for x, y in zip(a, b)]
    assert oracle_members(A.intersect(B)) == [x and y for x, y in zip(a, b)]
    assert oracle_members(A.subtract(B)) == [x and not y for x, y in zip(a, b)]
    assert A.measure() == F(sum(a), 8)


@settings(max_examples=100, deadline=None)
@given(grid_sets())
def test_canonical_form_merges_adjacent_pieces(a):
    A = to_set(a)
    for (lo1, hi1), (lo2, hi2) in zip(A.pieces, A.pieces[1:]):
        assert hi1 < lo2
    assert IntervalSet(A.pieces) == A


@settings(max_examples=100, deadline=None)
@given(grid_sets(), st.integers(0, 7))
def test_leftmost_takes_a_prefix(a, k):
    A = to_set(a)
    w = min(A.measure(), ExactNum(F(k, 3)))
    L = A.leftmost(w)
    assert L.measure() == w
    assert L.subtract(A).is_empty()
    if not L.is_empty() and not A.subtract(L).is_empty():
        assert L.sup <= A.subtract(L).inf


def test_half_open_convention():
    s = IntervalSet.interval(0, 1)
    assert 0 in s and F(1) not in s
    assert IntervalSet([(0, 1), (1, 2)]) == IntervalSet.interval(0, 2)


def test_translation_inverse_and_compose():
    a = golden()
    rot = PiecewiseTranslation([(0, 1 - a, a), (1 - a, 1, a - 1)])
    inv = rot.invert()
    for k in range(50):
        x = ExactNum(F(k, 50))
        assert inv(rot(x)) == x
    ident = rot.compose(inv)
    assert disagreement(ident, PiecewiseTranslation.identity(IntervalSet.interval(0, 1))) == 0


def test_overlapping_images_rejected():
    with pytest.raises(GeometryError):
        PiecewiseTranslation([(0, 1, 1), (1, 2, 0)])


def test_pack_is_order_preserving_and_onto():
    s = IntervalSet([(0, F(1, 4)), (F(1, 2), 1), (3, F(7, 2))])
    p = pack(s)
    assert p.range() == IntervalSet.interval(0, F(5, 4))
    xs = [ExactNum(F(1, 8)), ExactNum(F(3, 4)), ExactNum(F(13, 4))]
    ys = [p(x) for x in xs]
    assert ys == sorted(ys)


def test_disagreement_counts_differing_shifts():
    dom = IntervalSet.interval(0, 2)
    f = PiecewiseTranslation([(0, 1, 1), (1, 2, -1)])
    g = PiecewiseTranslation([(0, F(1, 2), 1), (F(1, 2), 1, 5), (1, 2, -1)])
    assert f.domain() == dom
    assert disagreement(f, g) == F(1, 2)
