"""Seeded random instances shared by the tests."""
import random
from fractions import Fraction as F

from skyscraper import GeometricTail, HeightDistribution, TargetSequence
from skyscraper.exact import ExactNum
from skyscraper.generators import skyscraper


def random_distribution(rng: random.Random, tail: bool = True, max_explicit: int = 8, unit=F(1, 32)):
    heights = sorted(rng.sample(range(1, 11), rng.randint(1, max_explicit)))
    explicit = {h: unit * rng.randint(1, 12) for h in heights}
    t = None
    if tail:
        g = rng.choice((2, 3))
        r = rng.choice([F(1, g), F(g + 1, 2 * g + 1), F(3, 4)])
        t = GeometricTail(rng.randint(11, 14), g, ExactNum(F(rng.randint(1, 8), 16)), r)
        assert g * r >= 1
    return HeightDistribution(explicit, t)


def random_targets(rng: random.Random, dist: HeightDistribution) -> TargetSequence:
    return TargetSequence((dist,), F(rng.randint(1, 16), 16))


def random_skyscraper_model(rng: random.Random, tail: bool = True):
    return skyscraper(random_distribution(rng, tail)).conservative


def integer_distribution(rng: random.Random):
    """Finite distribution with integer widths; heights reach past the surgery range."""
    heights = sorted(rng.sample(range(1, 40), rng.randint(3, 8)))
    heights[-1] = max(heights[-1], 30)
    return HeightDistribution({h: rng.randint(1, 6) for h in heights})


def commensurate_cases(seed: int, count: int):
    """``count`` integer instances whose single surgery step cuts whole atoms.

    Yields ``(dist, n, lam, bounds)``; the bounds are a plain dict.
    """
    from skyscraper import SurgeredPresentation, expand_at
    from skyscraper.surgery import SurgeryError

    rng = random.Random(seed)
    found = 0
    while found < count:
        dist = integer_distribution(rng)
        n = rng.randint(1, 3)
        lam = int(dist.width(n).a) + rng.randint(1, 4)
        bounds = {k: int(dist.width(k).a) + rng.randint(1, 5) for k in range(1, 2 * n + 1)}
        c = skyscraper(dist).conservative
        try:
            step, _ = expand_at(SurgeredPresentation(c), n, lam, lambda k: bounds[k])
        except SurgeryError:
            continue
        if all(cut.width.b == 0 and cut.width.a.denominator == 1 for cut in step.cuts):
            found += 1
            yield dist, n, lam, bounds


D_VALUES = ["0", "1/2", "1", "3/2", "inf"]


def with_d(d: str, conservative: bool = True):
    """A model whose dissipative part has fundamental-domain measure ``d``."""
    from skyscraper import Transformation
    from skyscraper.dynamics import DissipativePart
    from skyscraper.generators import geometric_skyscraper

    cons = geometric_skyscraper().conservative if conservative or d == "0" else None
    if d == "0":
        dis = DissipativePart()
    elif d == "inf":
        dis = DissipativePart((), infinite_tail=F(1, 3))
    elif d == "3/2":
        dis = DissipativePart([("a", 1), ("b", F(1, 2))])
    else:
        dis = DissipativePart([("a", F(d))])
    return Transformation(dis, cons)


def random_patch(rng: random.Random, T):
    """A patch swapping two adjacent intervals, on a shift line or a tower level."""
    from skyscraper.conjugacy import Patch
    from skyscraper.geometry import PiecewiseTranslation

    labels = T.dissipative.labels(limit=2)
    if labels and (T.conservative is None or rng.random() < 0.7):
        label = rng.choice(labels)
        s = F(rng.randint(1, 12), 16)
        a = F(rng.randint(-40, 40), 8)
        return Patch(("shift", label), PiecewiseTranslation([(a, a + s, s), (a + s, a + 2 * s, -s)]))
    c = T.conservative
    h = rng.choice([1, 2, 4])
    lo, hi = c.layout_line(h)
    s = (hi - lo) / rng.randint(2, 6)
    return Patch(("tower", h, rng.randrange(h)), PiecewiseTranslation([(lo, lo + s, s), (lo + s, lo + 2 * s, -s)]))
