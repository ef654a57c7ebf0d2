"""Return-time surgery: postconditions, the worked example, lazy forcing."""
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper import HeightDistribution, SurgeredPresentation, TargetSequence, expand_at, expand_to, match_distributions
from skyscraper.dynamics import BudgetExceeded, ConservativePoint
from skyscraper.exact import ExactNum
from skyscraper.generators import skyscraper
from skyscraper.surgery import InsufficientMass, SurgeryError

from conftest import geo, sky2
from instances import random_distribution, random_targets


def worked_example():
    c = skyscraper(HeightDistribution({1: 1, 3: 2})).conservative
    return expand_at(SurgeredPresentation(c), 1, 2, lambda k: 10)


def test_worked_example():
    step, P = worked_example()
    assert P.distribution == HeightDistribution({1: 2, 2: 1, 3: 1})
    assert (step.m, step.D_width, step.added_mass, step.K) == (3, 1, 1, 1)
    assert P.distribution.mass() == 7


def test_input_presentation_untouched():
    c = skyscraper(HeightDistribution({1: 1, 3: 2})).conservative
    P = SurgeredPresentation(c)
    expand_at(P, 1, 2, lambda k: 10)
    assert P.distribution == c.heights and not P.steps


def check_postconditions(before, after, n, lam, bound, upto):
    for k in range(1, n):
        assert after.width(k) == before.width(k)
    assert after.width(n) == lam
    for k in range(n + 1, upto):
        assert after.width(k) < bound(k)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6))
def test_expand_at_postconditions(seed, n):
    rng = random.Random(seed)
    dist = random_distribution(rng)
    targets = random_targets(rng, dist)
    c = skyscraper(dist).conservative
    step, P = expand_at(SurgeredPresentation(c), n, targets(n), targets)
    check_postconditions(dist, P.distribution, n, targets(n), targets, step.m + 2)
    # mass moves between towers but is never created
    assert sum(cut.width * cut.q for cut in step.cuts) == step.added_mass


def test_targets_must_exceed_current_mass():
    c = skyscraper(HeightDistribution({1: 1, 3: 2})).conservative
    with pytest.raises(SurgeryError):
        expand_at(SurgeredPresentation(c), 1, 1, lambda k: 10)
    with pytest.raises(SurgeryError):
        expand_at(SurgeredPresentation(c), 1, 2, lambda k: 0)


def test_finite_mass_runs_out():
    c = skyscraper(HeightDistribution({1: 1, 3: 2})).conservative
    with pytest.raises(InsufficientMass):
        expand_at(SurgeredPresentation(c), 1, 50, lambda k: 10)


def test_lazy_forcing_and_budget():
    c = geo().conservative
    targets = TargetSequence((c.heights,), F(1, 4))
    P = expand_to(c, targets, 4)
    assert P.forced_through == 4
    for n in range(1, 5):
        assert P.distribution.width(n) == targets(n)
    P.force(9)
    assert P.forced_through == 9
    capped = expand_to(c, targets, 2, budget=3)
    with pytest.raises(BudgetExceeded):
        capped.force(4)


def test_chunks_resolve_and_round_trip():
    c = geo().conservative
    P = expand_to(c, TargetSequence((c.heights,), F(1, 4)), 6)
    rng = random.Random(0)
    for _ in range(100):
        p = c.sample_point(rng, 64)
        chunk = P.resolve(p)
        assert 0 <= chunk.sublevel < chunk.height
        pos = P.class_position(p, chunk)
        assert P.point_at(chunk.height, pos, chunk.sublevel) == p


def test_class_blocks_cover_the_class_width():
    c = geo().conservative
    P = expand_to(c, TargetSequence((c.heights,), F(1, 4)), 6)
    for h in range(1, 7):
        blocks, _ = P.class_blocks(h)
        total = sum((b.width for b in blocks), ExactNum(0))
        assert total == P.distribution.width(h)


def test_match_distributions_agree_height_by_height():
    P1, P2, targets = match_distributions(geo(), sky2(), F(1, 4), 8)
    assert targets.total() < F(1, 4)
    for h in range(1, 9):
        assert P1.distribution.width(h) == P2.distribution.width(h) == targets(h)
