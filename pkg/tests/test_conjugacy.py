"""Classification, absorption, certified conjugacies and their pointwise checks."""
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skyscraper import Transformation, absorb, classify, fundamental_domain_check, lambda_approx_conjugacy, mu_approx_conjugacy, perturbation_bound_check
from skyscraper.conjugacy import ConjugacyError, Patch, PatchedTransformation
from skyscraper.dynamics import DissipativePart, DissipativePoint
from skyscraper.exact import INFINITY, ExactNum
from skyscraper.generators import shift
from skyscraper.geometry import IntervalSet, PiecewiseTranslation

from conftest import geo, shift_plus, sky2
from instances import D_VALUES, random_patch, with_d


@pytest.mark.parametrize("d1", D_VALUES)
@pytest.mark.parametrize("d2", D_VALUES)
def test_classification_dichotomy(d1, d2):
    c = classify(with_d(d1), with_d(d2, conservative=False))
    assert c.possible == (d1 == d2)
    text = str(c)
    assert text.startswith("conjugacy possible" if d1 == d2 else "impossible")


def test_classification_text():
    assert str(classify(shift(1), shift("3/2"))) == "impossible: d1=1, d2=3/2"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(D_VALUES))
def test_patched_variants_keep_a_large_domain(seed, d):
    rng = random.Random(seed)
    T = with_d(d)
    P = PatchedTransformation(T, [random_patch(rng, T) for _ in range(rng.randint(1, 3))])
    rec = perturbation_bound_check(T, P)
    assert rec.holds
    if rec.d1 is not INFINITY:
        assert rec.exhibited >= rec.d1 - rec.eps


def test_patched_map_is_a_bijection():
    T = shift(1)
    pi = PiecewiseTranslation([(0, F(1, 8), F(1, 8)), (F(1, 8), F(1, 4), -F(1, 8))])
    P = PatchedTransformation(T, [Patch(("shift", "a"), pi)])
    for k in range(-20, 20):
        p = DissipativePoint("a", ExactNum(F(k, 7)))
        assert P.apply(P.apply(p), inverse=True) == p
    assert P.disagreement() == F(1, 4)


@pytest.mark.parametrize("eps", [F(1, 2), F(1, 8)])
def test_absorb_certificate_is_twice_the_base(eps):
    T = shift_plus(geo())
    m = absorb(T, eps)
    beta = m.target.beta
    assert m.certificate.bound == 2 * beta
    assert beta < eps / 2
    assert m.target.disagreement == 2 * beta
    assert m.verify(200)["passed"]


def test_absorbed_map_has_a_fundamental_domain():
    m = absorb(shift_plus(geo()), F(1, 2))
    v = fundamental_domain_check(m, None, 200, 10_000)
    assert v.status == "verified_on_samples"
    bad = fundamental_domain_check(shift(1), {"a": IntervalSet.interval(0, 2)}, 20, 100)
    assert bad.status == "counterexample"


def test_absorb_needs_both_parts():
    with pytest.raises(ConjugacyError):
        absorb(geo(), F(1, 2))


def test_tower_matching_conjugacy():
    m = lambda_approx_conjugacy(geo(), sky2(), F(1, 4), 8)
    assert m.kind == "tower_matching"
    assert m.certificate.bound == m.targets.total() < F(1, 4)
    r = m.verify(500)
    assert r["passed"] and r["unresolved"] == 0
    assert r["relation_failures"] == r["exception_points"]


def test_composite_and_repack_conjugacies():
    m = lambda_approx_conjugacy(shift(1), shift_plus(geo()), F(1, 8))
    assert m.kind == "composite" and m.certificate.bound < F(1, 8)
    assert m.verify(300)["passed"]
    two = DissipativePart([("a", F(1, 2)), ("b", F(1, 2))])
    r = lambda_approx_conjugacy(shift(1), Transformation(two), F(1, 8))
    assert r.kind == "dissipative_repack" and r.certificate.bound == 0
    rep = r.verify(300)
    assert rep["relation_failures"] == 0


def test_impossible_pairs_are_refused():
    with pytest.raises(ConjugacyError):
        lambda_approx_conjugacy(shift(1), shift("3/2"), F(1, 4))


@pytest.mark.parametrize("eps", [F(1, 4), F(1, 10)])
def test_mu_conjugacy_certificate(eps):
    m = mu_approx_conjugacy(shift(1), geo(), eps)
    assert m.certificate.bound < eps
    assert m.verify(100, max_height=64)["passed"]
