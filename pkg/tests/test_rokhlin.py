"""Rokhlin sets and the reference probability measure."""
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper import ConservativePoint, HeightDistribution, MuWeights, Transformation, mu_measure, rokhlin_set
from skyscraper.dynamics import DissipativePart, DissipativePoint, ModelError
from skyscraper.exact import ExactNum
from skyscraper.generators import shift

from conftest import geo, shift_plus, sky2


def complement_by_levels(rs, max_height):
    """Oracle: count the levels whose points lie on no floor, tower by tower."""
    part = rs.part
    total = ExactNum(0)
    for n, w in part.heights.items_upto(max_height):
        x = part.base_point(n, ExactNum(0))
        free = sum(1 for L in range(n) if rs.floor_of(ConservativePoint(n, L, x)) is None)
        total = total + w * free
    return total


def test_geometric_instance_with_two_levels():
    rs = rokhlin_set(geo(), 2, 1)
    assert rs.part.base_measure == 1  # no shrinking needed
    assert rs.complement_measure() == F(1, 2)
    assert complement_by_levels(rs, 2**12) == F(1, 2)
    assert rs.check_disjoint(64)


@pytest.mark.parametrize("N,eps", [(3, F(1, 2)), (5, F(1, 10)), (8, F(1, 100))])
def test_complement_below_epsilon(N, eps):
    for T in (geo(), sky2(), shift_plus(geo())):
        rs = rokhlin_set(T, N, eps)
        assert rs.complement_measure() < eps
        assert rs.check_disjoint(8 * N)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_floors_follow_the_dynamics(seed, N):
    # a point on floor j sits j steps above its base point
    T = shift_plus(sky2())
    rs = rokhlin_set(T, N, F(1, 2))
    rng = random.Random(seed)
    part_T = Transformation(T.dissipative, rs.part)
    p = rs.part.sample_point(rng, 60) if rng.random() < 0.7 else DissipativePoint("a", ExactNum(F(rng.randrange(-99, 99), 7)))
    fl = rs.floor_of(p)
    if fl is None:
        return
    j, base = fl
    q = base
    for _ in range(j):
        q = part_T.apply(q)
    assert q == p
    assert rs.floor_of(base) == (0, base)


def test_trim_adds_exactly_the_defect():
    rs = rokhlin_set(geo(), 4, F(1, 2))
    t = rs.with_trim(F(1, 64))
    assert t.complement_measure() == rs.complement_measure() + F(1, 64)
    s = rokhlin_set(shift(1), 4, F(1, 2)).with_trim(F(1, 64))
    assert s.complement_measure() == F(1, 64)
    with pytest.raises(ModelError):
        rokhlin_set(geo(), 0, F(1, 2))


def test_mu_weights_sum_to_one():
    for T in (geo(), sky2(), shift_plus(geo()), Transformation(DissipativePart([("a", 1), ("b", F(1, 2))]))):
        w = MuWeights(T)
        for J in (5, 20, 40):
            total = sum((w.weight(j) for j in range(J)), ExactNum(0)) + w.tail_mass(J)
            assert total == 1
        assert mu_measure(w, "whole") == 1


def test_mu_of_cells_and_halves():
    w = MuWeights(geo())
    assert mu_measure(w, [("cell", 0)]) == F(1, 2)
    assert mu_measure(w, [("cell", 1)]) == F(1, 4)
    assert mu_measure(w, [("cell", 0, ExactNum(0), ExactNum(F(1, 2)))]) == F(1, 4)


def test_trim_spreads_over_blocks_of_a_narrow_tower():
    from skyscraper.conjugacy import _ComplementPacking, _FloorPacking
    from skyscraper.generators import skyscraper

    T = skyscraper(HeightDistribution({2: F(1, 16), 8: F(1, 4)}))
    rs = rokhlin_set(T, 2, 10)
    assert rs.complement_measure() == 0
    t = rs.with_trim(F(3, 4))  # per block 3/8, wider than every tower
    tr = t.trim
    assert (tr.n, tr.count, tr.t) == (8, 2, F(3, 16))
    assert t.complement_measure() == F(3, 4)
    assert t.check_disjoint(8)
    edge = F(1, 4) - tr.t
    for level in range(8):
        inside = ConservativePoint(8, level, t.part.base_point(8, edge))
        below = ConservativePoint(8, level, t.part.base_point(8, edge - F(1, 64)))
        assert (t.floor_of(inside) is None) == (4 <= level < 8)
        assert t.floor_of(below) is not None
    comp, floors = _ComplementPacking(t), _FloorPacking(t, T)
    rng = random.Random(0)
    for _ in range(50):
        p = t.part.sample_point(rng, 8)
        fl = t.floor_of(p)
        if fl is None:
            assert comp.locate(comp.position(p)) == p
        else:
            base = fl[1]
            assert floors.locate(floors.position(base)) == base
