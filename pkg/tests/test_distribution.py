"""Height distributions: closed-form tail sums against direct summation."""
from fractions import Fraction as F
from itertools import islice

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper.distribution import DistributionError, GeometricTail, HeightDistribution, TargetSequence
from skyscraper.exact import ExactNum, golden

tails = st.builds(
    GeometricTail,
    n0=st.integers(1, 5),
    g=st.integers(2, 4),
    w0=st.fractions(F(1, 64), F(1), max_denominator=64).map(ExactNum),
    r=st.sampled_from([F(1, 2), F(1, 3), F(2, 3), F(1, 5)]),
    offset=st.integers(0, 3),
)


def partial(tail, f, upto):
    total = ExactNum(0)
    for j in range(tail.start, upto):
        total = total + f(j)
    return total


@settings(max_examples=60, deadline=None)
@given(tails, st.integers(0, 12))
def test_remaining_and_cumulative(tail, j):
    # remaining(j) is the geometric series; cumulative is the partial sum
    assert tail.cumulative(j) == partial(tail, tail.width, j)
    assert tail.remaining(j) - tail.remaining(j + 1) == tail.width(j)


@settings(max_examples=60, deadline=None)
@given(tails, st.integers(2, 7))
def test_mod_sum_against_long_partial_sums(tail, N):
    # finite or not, the series of (height mod N) * width converges
    got = tail.mod_sum(N)
    upto = 200
    approx = partial(tail, lambda j: tail.width(j) * (tail.height(j) % N), upto)
    slack = tail.remaining(upto) * N
    assert approx <= got <= approx + slack


@settings(max_examples=60, deadline=None)
@given(tails)
def test_mass_for_finite_tails(tail):
    if tail.infinite_mass:
        with pytest.raises(DistributionError):
            tail.mass()
        return
    upto = 300
    approx = partial(tail, lambda j: tail.width(j) * tail.height(j), upto)
    assert approx < tail.mass()
    assert float(tail.mass() - approx) < 1e-20


@settings(max_examples=60, deadline=None)
@given(tails, st.integers(0, 10), st.fractions(0, 1, max_denominator=97))
def test_index_at_position_agrees_with_linear_scan(tail, j, frac):
    t = tail.cumulative(j) + tail.width(j) * frac
    if frac == 1:
        j += 1
    assert tail.index_at_position(t) == j


def test_index_at_position_near_the_right_end():
    tail = GeometricTail(2, 3, ExactNum(F(1, 2)), F(1, 3))
    # within 10**-40 of the end, but irrational: floats cancel completely
    t = tail.total() - (golden() - F(1, 2)) / 10**40
    j = tail.index_at_position(t)
    assert tail.cumulative(j) <= t < tail.cumulative(j + 1)


def test_layout_and_height_lookup():
    d = HeightDistribution({1: F(1, 4), 3: F(1, 8)}, GeometricTail(4, 2, ExactNum(F(1, 4)), F(1, 2)))
    assert d.total_width() == F(1, 4) + F(1, 8) + F(1, 2)
    assert d.layout_start(3) == F(1, 4)
    assert d.layout_start(8) == F(3, 8) + F(1, 4)
    assert d.height_at(ExactNum(F(1, 5))) == 1
    assert d.height_at(ExactNum(F(3, 8))) == 4
    assert d.width(8) == F(1, 8) and d.width(5) == 0
    assert list(islice(d.heights_from(2), 4)) == [3, 4, 8, 16]


def test_target_sequence_total_is_closed_form():
    floor = HeightDistribution({1: F(1, 4)}, GeometricTail(2, 2, ExactNum(F(1, 8)), F(1, 2)))
    t = TargetSequence((floor,), F(1, 16))
    direct = sum((t(n) for n in range(1, 80)), ExactNum(0))
    # heights >= 80 of the floor are the tail entries from 2 * 2**6 on
    rest = floor.tail.remaining(6) + F(1, 16) * F(1, 2**79)
    assert t.total() == direct + rest
    t.check_dominates(floor)


def test_json_round_trip():
    d = HeightDistribution({1: F(1, 4)}, GeometricTail(2, 3, ExactNum(F(1, 2)), F(1, 3)))
    assert HeightDistribution.from_json(d.to_json()) == d
