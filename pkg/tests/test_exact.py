"""Exact arithmetic in Q(sqrt(d)), checked against high-precision decimals."""
from decimal import Decimal, getcontext
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper.exact import (
    INFINITY,
    DiscriminantMismatch,
    ExactNum,
    as_exact,
    compare,
    golden,
    parse_exact,
    sqrt_d,
)

getcontext().prec = 80

fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6)
discs = st.sampled_from([2, 3, 5, 7])


def decimal_value(x: ExactNum) -> Decimal:
    a, b = x.a, x.b
    return Decimal(a.numerator) / Decimal(a.denominator) + Decimal(b.numerator) / Decimal(b.denominator) * Decimal(x.d).sqrt()


def test_golden_identity():
    phi = golden()
    assert phi * phi + phi == 1
    assert 0 < phi < 1


def test_floor_of_sqrt5():
    assert sqrt_d(5).floor() == 2
    assert (-sqrt_d(5)).floor() == -3


def test_rationals_mix_with_any_field():
    assert (as_exact(F(1, 2)) + sqrt_d(3)).d == 3
    with pytest.raises(DiscriminantMismatch):
        sqrt_d(2) + sqrt_d(3)


def test_text_round_trip_and_rejections():
    for text in ["0", "-3/7", "1/2+3/4*sqrt(5)", "-1-1/3*sqrt(2)"]:
        assert str(parse_exact(text)) == text
    for bad in ["0.5", "1/0", "1+sqrt(5)", "1+1*sqrt(4)"]:
        with pytest.raises(ValueError):
            parse_exact(bad)
    with pytest.raises(TypeError):
        as_exact(0.5)


def test_infinity_orders_above_everything():
    assert INFINITY > ExactNum(10**9)
    assert not INFINITY < ExactNum(0)
    assert INFINITY == INFINITY


@settings(max_examples=300, deadline=None)
@given(fractions, fractions, fractions, fractions, discs)
def test_comparison_matches_decimal_oracle(a, b, c, e, d):
    x, y = ExactNum(a, b, d), ExactNum(c, e, d)
    dx, dy = decimal_value(x), decimal_value(y)
    expected = "EQ" if x == y else ("GT" if dx > dy else "LT")
    assert compare(x, y) == expected


@settings(max_examples=200, deadline=None)
@given(fractions, fractions, discs)
def test_near_ties_are_decided_exactly(a, b, d):
    # x and x + tiny differ by 10**-40 - a gap far below float resolution
    x = ExactNum(a, b, d)
    y = x + F(1, 10**40)
    assert x < y and y > x and x != y
    z = ExactNum(a, b, d) - ExactNum(a, b, d)
    assert z == 0 and z.sign() == 0


@settings(max_examples=200, deadline=None)
@given(fractions, fractions, fractions, fractions, discs)
def test_field_operations(a, b, c, e, d):
    x, y = ExactNum(a, b, d), ExactNum(c, e, d)
    assert (x + y) - y == x
    if y:
        assert (x * y) / y == x
    assert abs(decimal_value(x * y) - decimal_value(x) * decimal_value(y)) < Decimal(10) ** -50


@settings(max_examples=200, deadline=None)
@given(fractions, fractions, discs)
def test_floor_matches_oracle(a, b, d):
    x = ExactNum(a, b, d)
    assert x.floor() == int(decimal_value(x).to_integral_value(rounding="ROUND_FLOOR"))


def test_cancellation_does_not_fool_the_float_filter():
    # Fibonacci ratios approach the golden ratio to about 10**-42; the float
    # values of both parts cancel completely
    f = [1, 1]
    while len(f) < 102:
        f.append(f[-1] + f[-2])
    ratio = F(f[101], f[100])
    phi = (1 + sqrt_d(5)) / 2
    diff = phi - ratio  # odd index: ratio overshoots
    sign = 1 if decimal_value(diff) > 0 else -1
    assert diff.sign() == sign
    tiny = F(1, 10**60)
    assert (diff > tiny) == (sign > 0)
    assert (ExactNum(tiny) < diff) == (sign > 0)
