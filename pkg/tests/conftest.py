"""
Shared fixtures
"""
import math

import numpy as np
import pytest

from config.settings import get_settings, override_settings
from src.models.base import KernelFamily, KernelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def se_kernel():
    return KernelSpec(family=KernelFamily.SQUARED_EXPONENTIAL, signal_variance=1.3, length_scales=(0.8,))


@pytest.fixture(autouse=True)
def restore_settings():
    values = get_settings().model_dump()
    yield
    override_settings(**values)


def expected_se(signal_variance: float, length_scale: float, offset, covariance) -> float:
    """
    Closed-form E[k(d)] for an isotropic SE kernel with d ~ N(offset, covariance):
    sf2 |I + L^-1 S|^-1/2 exp(-1/2 d^T (L + S)^-1 d), L = l^2 I
    """
    lam = length_scale ** 2 * np.eye(2)
    offset = np.asarray(offset, dtype=float)
    cov = np.asarray(covariance, dtype=float)
    det = np.linalg.det(np.eye(2) + np.linalg.solve(lam, cov))
    quad = offset @ np.linalg.solve(lam + cov, offset)
    return signal_variance * det ** -0.5 * math.exp(-0.5 * quad)
