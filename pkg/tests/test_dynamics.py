"""Skyscraper + shift models; induced maps checked against brute-force first returns."""
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper import (
    ConservativePoint,
    DissipativePart,
    GeometricTail,
    HeightDistribution,
    IntervalSet,
    Transformation,
    build_conservative,
    golden,
    hopf,
    induce,
    return_distribution,
    rotation,
    shrink_base,
)
from skyscraper.dynamics import DissipativePoint, ModelError, from_root, to_root
from skyscraper.exact import INFINITY, ExactNum
from skyscraper.generators import geometric_skyscraper

from conftest import geo


def finite_sky():
    heights = HeightDistribution({1: F(1, 2), 2: F(1, 3), 5: F(1, 6)})
    return build_conservative(IntervalSet.interval(0, 1), rotation(golden()), heights)


def first_return(c, x, sub_base, limit=10_000):
    """Oracle: walk the skyscraper level by level until the base point lands in sub_base."""
    p = ConservativePoint(c.height_of(x), 0, x)
    steps = 0
    while True:
        p = c.apply(p)
        steps += 1
        if p.level == 0 and p.x in sub_base:
            return steps, p.x
        assert steps < limit


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_apply_inverse_round_trip(seed):
    rng = random.Random(seed)
    c = geo().conservative
    p = c.sample_point(rng, 64)
    assert c.apply(c.apply(p), inverse=True) == p
    assert c.apply(c.apply(p, inverse=True)) == p
    assert c.contains(c.apply(p))


def test_induced_map_matches_first_returns():
    c = finite_sky()
    sub = IntervalSet([(0, F(1, 5)), (F(1, 2), F(3, 5))])
    child = induce(c, sub)
    phi = child.origin.phi
    assert child.base_measure == sub.measure()
    rng = random.Random(3)
    for _ in range(200):
        lo, hi = sub.pieces[rng.randrange(2)]
        x = lo + (hi - lo) * F(rng.randrange(1 << 16), 1 << 16)
        steps, y = first_return(c, x, sub)
        assert child.height_of(phi(x)) == steps
        assert child.base_map(phi(x)) == phi(y)


def test_return_distribution_total_width():
    c = finite_sky()
    sub = IntervalSet.interval(F(1, 7), F(4, 7))
    dist = return_distribution(c, sub)
    assert dist.total_width() == F(3, 7)
    assert return_distribution(c) is c.heights


def test_induced_mass_is_conserved_for_finite_models():
    c = finite_sky()
    child = induce(c, IntervalSet.interval(0, F(1, 3)))
    assert child.total_measure() == c.total_measure()


@pytest.mark.parametrize("eps", [F(1, 2), F(1, 10), F(1, 100)])
def test_shrink_base_and_root_round_trip(eps):
    c = geo().conservative
    s = shrink_base(c, eps)
    assert s.base_measure < eps
    assert s.infinite_total_measure
    rng = random.Random(1)
    for _ in range(20):
        p = c.sample_point(rng, 16)
        q = from_root(s, p)
        assert s.contains(q)
        assert to_root(s, q) == p


def test_hopf_decomposition_reports_d():
    T = Transformation(DissipativePart([("a", F(1, 2)), ("b", F(3, 4))]), geo().conservative)
    d, dis, cons = hopf(T)
    assert d == F(5, 4) and cons is T.conservative
    assert hopf(geo())[0] == 0
    assert Transformation(DissipativePart((), infinite_tail=1)).dissipative.total() is INFINITY


def test_shift_points():
    T = Transformation(DissipativePart([("a", F(3, 2))]))
    p = DissipativePoint("a", ExactNum(F(1, 3)))
    assert T.apply(p) == DissipativePoint("a", ExactNum(F(11, 6)))
    assert T.apply(T.apply(p), inverse=True) == p


def test_model_errors():
    with pytest.raises(ModelError):
        build_conservative(IntervalSet.interval(0, 1), rotation(golden()), HeightDistribution({1: F(1, 2)}))
    with pytest.raises(ModelError):
        DissipativePart([("a", 0)])
    with pytest.warns(UserWarning):
        build_conservative(IntervalSet.interval(0, 1), rotation(F(1, 3)), HeightDistribution({1: 1}))


def test_standard_instance_is_infinite():
    c = geometric_skyscraper(1, 2, "1/2", "1/2").conservative
    assert c.base_measure == 1 and c.infinite_total_measure and c.aperiodic
    assert c.heights.tail == GeometricTail(1, 2, ExactNum(F(1, 2)), F(1, 2))
