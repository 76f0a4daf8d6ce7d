from __future__ import annotations

import numpy as np
import pytest

from minkgh.config import DEFAULT_TOLERANCES, Tolerances
from minkgh.kleinian import GroupSpec, schottky_spec
from minkgh.minkowski import Isometry, random_lorentz
from minkgh.models import null_frame, unipotent_isometry

ROOT_HALF = 1.0 / np.sqrt(2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def tol() -> Tolerances:
    return DEFAULT_TOLERANCES


@pytest.fixture
def lorentz_samples(rng: np.random.Generator) -> list:
    return [random_lorentz(n, rng) for n in (3, 4, 5) for _ in range(5)]


@pytest.fixture
def schottky() -> GroupSpec:
    return schottky_spec(3)


@pytest.fixture
def linear_unipotent() -> Isometry:
    """x -> x - y/2 - z, z -> z + y in null coordinates of M^3."""
    return unipotent_isometry([0.0], [1.0], 0.0)


@pytest.fixture
def transverse_unipotent(linear_unipotent: Isometry) -> Isometry:
    col_y = null_frame(3)[:, 1]
    return Isometry(linear_unipotent.L, col_y)
