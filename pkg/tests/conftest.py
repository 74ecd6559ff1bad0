"""Shared fixtures: catalog manifolds, parameters and a seeded generator."""

from __future__ import annotations

import numpy as np
import pytest

from belab.geometry.catalog import cylinder, flat_torus, round_sphere
from belab.geometry.params import BakryEmeryParams


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def torus():
    return flat_torus()


@pytest.fixture(scope="session")
def torus_with_drift():
    """Flat 2-torus with X = 0.5 dx0."""
    return flat_torus(X=(0.5, 0.0))


@pytest.fixture
def drift_params() -> BakryEmeryParams:
    """m = 2 and delta = c^2 / (m (n - 1)) for |X| = 0.5."""
    return BakryEmeryParams(m=2.0, delta=0.125, C=0.5)


@pytest.fixture(scope="session")
def sphere():
    return round_sphere()


@pytest.fixture(scope="session")
def long_cylinder():
    return cylinder(half_length=30.0)
