"""Shared fixtures for the moser-modulus test suite."""
import numpy as np
import pytest

from moser_modulus.geometry import SquareUnion
from moser_modulus.wormgraphs import ConstantPiles, build_sequence, sample_omega


@pytest.fixture
def rng():
    """Deterministic random generator fixture."""
    return np.random.default_rng(2024)


@pytest.fixture
def seq3():
    """Greedy subdivision sequence of depth 3."""
    return build_sequence(3)


@pytest.fixture
def sample():
    """Seeded random branch of depth 4."""
    return sample_omega(4, 7)


@pytest.fixture
def flat_sample():
    """Depth-3 branch that always keeps the bottom pile: a horizontal graph."""
    return sample_omega(3, 0, ConstantPiles(1))


@pytest.fixture
def small_square():
    """Square of side 0.01 in the middle of the unit square (area 1e-4)."""
    return SquareUnion.of(((0.495, 0.495), 0.01))


@pytest.fixture
def strip_square():
    """Half-unit square centred on the x-axis, straddling the bottom edge."""
    return SquareUnion.of(((0.25, -0.25), 0.5))
