"""Shared instances."""
from fractions import Fraction as F

import pytest

from skyscraper import GeometricTail, HeightDistribution, Transformation
from skyscraper.dynamics import DissipativePart
from skyscraper.generators import geometric_skyscraper, shift, skyscraper


def geo():
    """Heights 2**j with widths 2**-(j+1): infinite measure, base [0, 1)."""
    return geometric_skyscraper()


def sky2():
    """A different skyscraper over a different rotation number of the field."""
    T = skyscraper(HeightDistribution({1: F(1, 4)}, GeometricTail(2, 3, F(1, 2), F(1, 3))))
    return T


def shift_plus(T, d=1, label="a"):
    return Transformation(DissipativePart([(label, d)]), T.conservative)


@pytest.fixture
def geo_t():
    return geo()


@pytest.fixture
def sky2_t():
    return sky2()


@pytest.fixture
def unit_shift():
    return shift(1)
