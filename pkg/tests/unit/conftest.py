import os
import numpy as np
import pytest

# Set testing environment: Need to set before the entry point configures logging
os.environ["TESTING"] = "true"

from calculus.geometry import Domain, build_partition
from calculus.level import build_level


@pytest.fixture(scope="session")
def line_partition():
    return build_partition(Domain((0.0,), (1.0,)), [8])


@pytest.fixture(scope="session")
def square_partition():
    return build_partition(Domain((0.0, 0.0), (1.0, 1.0)), [4, 4])


@pytest.fixture(scope="session")
def line_level(line_partition):
    """8 cells, k=2, two staggered seeds per cell."""
    return build_level(line_partition, 2, 2)


@pytest.fixture(scope="session")
def line_seedless(line_partition):
    return build_level(line_partition, 2, 0)


@pytest.fixture(scope="session")
def square_level(square_partition):
    """4×4 cells, k=2, a 2×2 block of staggered seeds per cell."""
    return build_level(square_partition, 2, 4)


@pytest.fixture(scope="session")
def square_seedless(square_partition):
    return build_level(square_partition, 2, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
