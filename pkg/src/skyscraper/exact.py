"""Exact arithmetic in real quadratic fields Q(sqrt(d)).

Every coordinate, width and measure in the package is an :class:`ExactNum`,
an element ``a + b*sqrt(d)`` with rational ``a`` and ``b``.  Comparisons are
decided by exact sign determination.  A cached float approximation settles
comparisons whose gap is far above rounding error; near-ties always fall
back to exact arithmetic.

Numbers with ``b == 0`` are plain rationals and combine with numbers of any
discriminant.  Two numbers with nonzero radical parts must share ``d``.
"""
from __future__ import annotations

import math
from functools import lru_cache
import re
from fractions import Fraction
from numbers import Rational

DEFAULT_DISCRIMINANT = 5

__all__ = [
    "DEFAULT_DISCRIMINANT",
    "DiscriminantMismatch",
    "ExactNum",
    "as_exact",
    "compare",
    "golden",
    "parse_exact",
    "sqrt_d",
]


class DiscriminantMismatch(ValueError):
    """Raised when two irrational operands live in different fields."""


def _is_squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


@lru_cache(maxsize=64)
def _sqrt(d: int) -> float:
    return math.sqrt(d)


def _sign_of(a: Fraction, b: Fraction, d: int) -> int:
    """Sign of a + b*sqrt(d), exactly."""
    if not b:
        return (a > 0) - (a < 0)
    sb = 1 if b > 0 else -1
    if not a:
        return sb
    sa = 1 if a > 0 else -1
    if sa == sb:
        return sa
    # opposite signs: a float estimate settles all but near-ties
    try:
        x, y = float(a), float(b) * _sqrt(d)
    except OverflowError:
        pass
    else:
        if abs(x + y) > 1e-9 * (abs(x) + abs(y)) and abs(x) > 1e-290:
            return 1 if x + y > 0 else -1
    # compare a^2 with b^2 d
    lhs = a * a
    rhs = b * b * d
    if lhs > rhs:
        return sa
    if lhs < rhs:
        return sb
    return 0  # only reachable for square d, excluded by construction


class ExactNum:
    """An element ``a + b*sqrt(d)`` of a real quadratic field.

    >>> phi = ExactNum(Fraction(1, 2), Fraction(1, 2))
    >>> phi * (phi - 1)
    ExactNum('1')
    """

    __slots__ = ("a", "b", "d", "_f")

    def __init__(self, a=0, b=0, d: int = DEFAULT_DISCRIMINANT):
        if not isinstance(a, Fraction):
            a = Fraction(a)
        if not isinstance(b, Fraction):
            b = Fraction(b)
        self.a = a
        self.b = b
        self.d = d
        self._f = None

    @classmethod
    def _make(cls, a: Fraction, b: Fraction, d: int) -> "ExactNum":
        obj = object.__new__(cls)
        obj.a = a
        obj.b = b
        obj.d = d
        obj._f = None
        return obj

    def _approx(self):
        """``(value, error bound)`` as floats, or None when out of float range."""
        f = self._f
        if f is None:
            try:
                x = float(self.a)
                y = float(self.b) * _sqrt(self.d)
            except OverflowError:
                f = False
            else:
                mag = abs(x) + abs(y)
                if not math.isfinite(mag) or (mag and mag < 1e-250):
                    f = False
                else:
                    f = (x + y, mag * 4e-15)
            self._f = f
        return f if f is not False else None

    # -- structure -------------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return not self.b

    def _field(self, other: "ExactNum") -> int:
        if not other.b:
            return self.d
        if not self.b:
            return other.d
        if self.d != other.d:
            raise DiscriminantMismatch(f"sqrt({self.d}) vs sqrt({other.d})")
        return self.d

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, ExactNum):
            if isinstance(other, (int, Fraction)):
                return ExactNum._make(self.a + other, self.b, self.d)
            return NotImplemented
        d = self._field(other)
        return ExactNum._make(self.a + other.a, self.b + other.b, d)

    __radd__ = __add__

    def __neg__(self):
        return ExactNum._make(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if not isinstance(other, ExactNum):
            if isinstance(other, (int, Fraction)):
                return ExactNum._make(self.a - other, self.b, self.d)
            return NotImplemented
        d = self._field(other)
        return ExactNum._make(self.a - other.a, self.b - other.b, d)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ExactNum):
            if isinstance(other, (int, Fraction)):
                return ExactNum._make(self.a * other, self.b * other, self.d)
            return NotImplemented
        if not other.b:
            return ExactNum._make(self.a * other.a, self.b * other.a, self.d)
        if not self.b:
            return ExactNum._make(self.a * other.a, self.a * other.b, other.d)
        d = self._field(other)
        a = self.a * other.a + self.b * other.b * d
        b = self.a * other.b + self.b * other.a
        return ExactNum._make(a, b, d)

    __rmul__ = __mul__

    def conjugate(self) -> "ExactNum":
        return ExactNum._make(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def inverse(self) -> "ExactNum":
        if not self.b:
            if not self.a:
                raise ZeroDivisionError("ExactNum division by zero")
            return ExactNum._make(1 / self.a, self.b, self.d)
        n = self.norm()
        return ExactNum._make(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        if not isinstance(other, ExactNum):
            if isinstance(other, (int, Fraction)):
                if not other:
                    raise ZeroDivisionError("ExactNum division by zero")
                return ExactNum._make(self.a / other, self.b / other, self.d)
            return NotImplemented
        if not other.b:
            if not other.a:
                raise ZeroDivisionError("ExactNum division by zero")
            return ExactNum._make(self.a / other.a, self.b / other.a, self.d)
        self._field(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_exact(other, self.d) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = ExactNum._make(Fraction(1), Fraction(0), self.d)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- order -------------------------------------------------------------
    def sign(self) -> int:
        return _sign_of(self.a, self.b, self.d)

    def _cmp(self, other) -> int:
        if isinstance(other, ExactNum):
            x, y = self._approx(), other._approx()
            if x is not None and y is not None:
                gap = x[0] - y[0]
                if abs(gap) > 2 * (x[1] + y[1]) + 1e-200:
                    return 1 if gap > 0 else -1
            if self.b == other.b and (not self.b or self.d == other.d):
                # equal irrational parts (typically equal numbers): compare rational parts
                return (self.a > other.a) - (self.a < other.a)
            d = self._field(other)
            return _sign_of(self.a - other.a, self.b - other.b, d)
        if isinstance(other, (int, Fraction)):
            return _sign_of(self.a - other, self.b, self.d)
        raise TypeError(f"cannot compare ExactNum with {type(other).__name__}")

    def __eq__(self, other):
        if isinstance(other, ExactNum):
            if self.a != other.a or self.b != other.b:
                return False
            return not self.b or self.d == other.d
        if isinstance(other, (int, Fraction)):
            return not self.b and self.a == other
        return NotImplemented

    def __hash__(self):
        if not self.b:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __floor__(self) -> int:
        return self.floor()

    def floor(self) -> int:
        """Greatest integer not exceeding the real value."""
        if not self.b:
            return math.floor(self.a)
        # approximate b*sqrt(d) from below with integer square roots, then fix
        p, q = self.b.numerator, self.b.denominator
        scale = 1 << 64
        root = math.isqrt(p * p * self.d * scale * scale)
        approx = Fraction(root if p > 0 else -root, q * scale)
        guess = math.floor(self.a + approx)
        while self._cmp(guess) < 0:
            guess -= 1
        while self._cmp(guess + 1) >= 0:
            guess += 1
        return guess

    def __float__(self) -> float:
        f = self._approx()
        return f[0] if f is not None else float(self.a) + float(self.b) * math.sqrt(self.d)

    # -- text ------------------------------------------------------------
    def __str__(self) -> str:
        head = _frac_text(self.a)
        if not self.b:
            return head
        sign = "-" if self.b < 0 else "+"
        return f"{head}{sign}{_frac_text(abs(self.b))}*sqrt({self.d})"

    def __repr__(self) -> str:
        return f"ExactNum('{self}')"


def _frac_text(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


_RAT = r"-?\d+(?:/\d+)?"
_PATTERN = re.compile(
    rf"^(?P<a>{_RAT})(?:(?P<s>[+-])(?P<b>\d+(?:/\d+)?)\*sqrt\((?P<d>\d+)\))?$"
)


def _parse_frac(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ValueError("zero denominator")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def parse_exact(text: str) -> ExactNum:
    """Parse ``p/q`` or ``p/q+r/s*sqrt(d)``.

    Only the canonical form round-trips byte for byte, but non-reduced
    fractions are accepted and normalized.
    """
    m = _PATTERN.match(text.strip())
    if m is None:
        raise ValueError(f"not an exact number: {text!r}")
    a = _parse_frac(m["a"])
    if m["b"] is None:
        return ExactNum._make(a, Fraction(0), DEFAULT_DISCRIMINANT)
    b = _parse_frac(m["b"])
    if m["s"] == "-":
        b = -b
    d = int(m["d"])
    if not _is_squarefree(d):
        raise ValueError(f"discriminant {d} is not a square-free integer >= 2")
    return ExactNum._make(a, b, d)


def as_exact(x, d: int = DEFAULT_DISCRIMINANT) -> ExactNum:
    if isinstance(x, ExactNum):
        return x
    if isinstance(x, str):
        return parse_exact(x)
    if isinstance(x, (int, Fraction)) or isinstance(x, Rational):
        return ExactNum._make(Fraction(x), Fraction(0), d)
    raise TypeError(f"cannot convert {type(x).__name__} to ExactNum (floats are refused)")


def sqrt_d(d: int = DEFAULT_DISCRIMINANT) -> ExactNum:
    if not _is_squarefree(d):
        raise ValueError(f"discriminant {d} is not a square-free integer >= 2")
    return ExactNum._make(Fraction(0), Fraction(1), d)


def golden() -> ExactNum:
    """(sqrt(5) - 1) / 2, the rotation number used throughout the demos."""
    return ExactNum._make(Fraction(-1, 2), Fraction(1, 2), 5)


def compare(a, b) -> str:
    """Return ``"LT"``, ``"EQ"`` or ``"GT"``."""
    c = as_exact(a)._cmp(as_exact(b) if not isinstance(b, (int, Fraction)) else b)
    return ("EQ", "GT", "LT")[c]


ZERO = ExactNum(0)
ONE = ExactNum(1)


class _Infinity:
    """Symbolic +infinity; only comparisons and equality are supported."""

    __slots__ = ()

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("inf")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INFINITY = _Infinity()


def format_measure(x) -> str:
    return "inf" if x is INFINITY else str(x)


def parse_measure(text: str):
    return INFINITY if text == "inf" else parse_exact(text)
