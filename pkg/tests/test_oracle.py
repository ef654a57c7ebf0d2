"""The discrete atom model against the continuous surgery engine."""
import pytest

from skyscraper import HeightDistribution, SurgeredPresentation, compare_models, discrete_expand_at, discretize, expand_at
from skyscraper.generators import skyscraper
from skyscraper.oracle import AtomSystem, AtomTower, OracleError

from instances import commensurate_cases


def continuous_step(dist, n, lam, bounds):
    c = skyscraper(dist).conservative
    return expand_at(SurgeredPresentation(c), n, lam, lambda k: bounds[k])


def test_worked_example_in_atoms():
    dist = HeightDistribution({1: 1, 3: 2})
    s = discrete_expand_at(discretize(dist, 1, 3), 1, 2, {2: 10})
    assert s.distribution() == {1: 2, 2: 1, 3: 1}
    assert sum(h * c for h, c in s.distribution().items()) == 7


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_commensurate_instances_agree(seed):
    for dist, n, lam, bounds in commensurate_cases(seed, 20):
        step, P = continuous_step(dist, n, lam, bounds)
        s = discrete_expand_at(discretize(dist, 1, 60), n, lam, bounds)
        report = compare_models(P.distribution, s, 60)
        assert report.agree, report.to_json()


def test_atom_mass_is_conserved():
    for dist, n, lam, bounds in commensurate_cases(5, 10):
        before = discretize(dist, 1, 60)
        after = discrete_expand_at(before, n, lam, bounds)
        mass = lambda sys: sum(h * c for h, c in sys.distribution().items())
        assert mass(after) == mass(before)
        assert after.atoms() == before.atoms() + (lam - dist.width(n))


def test_disagreement_is_reported():
    dist = HeightDistribution({1: 1, 3: 2})
    wrong = AtomSystem.from_towers([AtomTower(1, 3), AtomTower(3, 1)])
    report = compare_models(dist, wrong, 3)
    assert not report.agree
    assert [m[0] for m in report.mismatches] == [1, 3]


def test_incommensurable_and_undiscretizable_inputs():
    with pytest.raises(OracleError):
        discretize(HeightDistribution({1: "1/3"}), 1, 3)
    # the only tall column yields two chunks but one atom is requested
    with pytest.raises(OracleError):
        discrete_expand_at(discretize(HeightDistribution({1: 1, 5: 1}), 1, 5), 1, 2, {2: 10})
