import numpy as np
import pytest

from crtlab.excursion import ExcursionPath, RngStream, sample_excursion
from crtlab.realtree import build_index


@pytest.fixture(scope="session")
def tent():
    """Symmetric tent of height 1/2: the tree is a segment of length 1/2."""
    return ExcursionPath(np.array([0.0, 0.125, 0.25, 0.375, 0.5, 0.375, 0.25, 0.125, 0.0]))


@pytest.fixture(scope="session")
def two_peak():
    """Peaks of height 1 at t=1/4 and t=3/4 with a valley of height 0.3."""
    return ExcursionPath(np.array([0.0, 0.5, 1.0, 0.65, 0.3, 0.65, 1.0, 0.5, 0.0]))


@pytest.fixture(scope="session")
def tent_index(tent):
    return build_index(tent)


@pytest.fixture(scope="session")
def two_peak_index(two_peak):
    return build_index(two_peak)


@pytest.fixture(scope="session")
def sampled_index():
    """One medium-resolution sampled excursion shared across geometry tests."""
    return build_index(sample_excursion(2**10, RngStream(2024, 1)))
