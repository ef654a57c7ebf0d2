"""Instance generators used by the CLI, the demos and the tests.

All generators are deterministic; ``random_skyscraper`` draws from its own
seeded generator, so equal seeds give equal instances.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .distribution import GeometricTail, HeightDistribution
from .dynamics import DissipativePart, ModelError, Transformation, build_conservative, rotation
from .exact import INFINITY, ExactNum, as_exact, golden, sqrt_d
from .geometry import IntervalSet

__all__ = [
    "GENERATORS",
    "geometric_skyscraper",
    "hajian_kakutani_like",
    "random_skyscraper",
    "rotation_number",
    "shift",
    "skyscraper",
]


def rotation_number(d: int = 5) -> ExactNum:
    """An irrational number in ``(0, 1)`` from ``Q(sqrt(d))``; the golden mean for ``d = 5``."""
    if d == 5:
        return golden()
    root = sqrt_d(d)
    return root - root.floor()


def skyscraper(heights: HeightDistribution, d: int = 5) -> Transformation:
    """Skyscraper over an irrational rotation of ``[0, total width)``."""
    beta = heights.total_width()
    if not beta > 0:
        raise ModelError("a skyscraper needs positive base measure")
    sigma = rotation(rotation_number(d) * beta, 0, beta)
    return Transformation(conservative=build_conservative(IntervalSet.interval(0, beta), sigma, heights))


def shift(d="1", label: str = "a") -> Transformation:
    """``x -> x + d`` on one line; ``d = inf`` gives countably many unit shifts."""
    if d is INFINITY or d == "inf":
        return Transformation(DissipativePart((), infinite_tail=1))
    return Transformation(DissipativePart([(label, as_exact(d))]))


def geometric_skyscraper(n0: int = 1, g: int = 2, w0="1/2", r="1/2", d: int = 5) -> Transformation:
    """Heights ``n0 * g**j`` with widths ``w0 * r**j``; infinite measure when ``g * r >= 1``."""
    tail = GeometricTail(int(n0), int(g), as_exact(w0), Fraction(str(r)))
    return skyscraper(HeightDistribution({}, tail), d)


def hajian_kakutani_like(d: int = 5) -> Transformation:
    """Doubling heights over halving widths, one unit tower on top.

    Every height class carries the same mass, as in the doubling
    constructions of infinite-measure transformations without a finite
    invariant measure.
    """
    tail = GeometricTail(2, 2, as_exact("1/4"), Fraction(1, 2))
    return skyscraper(HeightDistribution({1: as_exact("1/2")}, tail), d)


def random_skyscraper(seed: int = 0, d: int = 5, max_explicit: int = 8) -> Transformation:
    """Random explicit towers plus a geometric tail of infinite mass."""
    rng = random.Random(seed)
    g = rng.choice((2, 3))
    r = Fraction(1, g) if rng.random() < 0.5 else Fraction(g + 1, 2 * g + 1)
    n0 = rng.randint(9, 14)
    tail = GeometricTail(n0, g, as_exact(Fraction(rng.randint(1, 8), 16)), r)
    explicit = {}
    for h in sorted(rng.sample(range(1, 9), rng.randint(1, max_explicit))):
        explicit[h] = as_exact(Fraction(rng.randint(1, 12), 32))
    return skyscraper(HeightDistribution(explicit, tail), d)


GENERATORS = {
    "shift": shift,
    "hajian_kakutani_like": hajian_kakutani_like,
    "geometric_skyscraper": geometric_skyscraper,
    "random_skyscraper": random_skyscraper,
}
