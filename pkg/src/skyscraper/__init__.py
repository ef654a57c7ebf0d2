"""Exact skyscraper models for Rokhlin-type constructions in infinite ergodic theory."""

from .exact import INFINITY, ExactNum, as_exact, golden, parse_exact, sqrt_d
from .geometry import IntervalSet, PiecewiseTranslation, disagreement, pack
from .distribution import GeometricTail, HeightDistribution, TargetSequence
from .dynamics import (
    ConservativePart,
    ConservativePoint,
    DissipativePart,
    DissipativePoint,
    Transformation,
    build_conservative,
    hopf,
    induce,
    return_distribution,
    rotation,
    shrink_base,
)
from .surgery import SurgeredPresentation, SurgeryStep, expand_at, expand_to, match_distributions
from .oracle import AtomSystem, compare_models, discrete_expand_at, discretize
from .rokhlin import MuWeights, RokhlinSet, mu_measure, rokhlin_set
from .conjugacy import (
    CertifiedMap,
    absorb,
    classify,
    fundamental_domain_check,
    lambda_approx_conjugacy,
    mu_approx_conjugacy,
    perturbation_bound_check,
)

__version__ = "0.1.0"
