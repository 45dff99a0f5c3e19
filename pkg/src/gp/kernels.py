"""
Covariance functions

Every family implemented here is stationary, so kernels are evaluated on
separation vectors d = a - b. `kernel_from_offsets` is the vectorised
primitive; `eval_kernel` and `gram` are thin wrappers over it.
"""
import math

import numpy as np

from src.models.base import INPUT_DIM, KernelFamily, KernelSpec, as_points
from src.models.errors import InvalidInputError


_SQRT5 = math.sqrt(5.0)
_TWO_PI = 2.0 * math.pi


def _scaled_sq_distance(spec: KernelSpec, offsets: np.ndarray) -> np.ndarray:
    scales = np.asarray(spec.length_scales, dtype=float)
    return np.sum(np.square(offsets / scales), axis=-1)


def kernel_from_offsets(spec: KernelSpec, offsets: np.ndarray) -> np.ndarray:
    """
    Evaluate k on an array of separation vectors

    Args:
        spec: kernel family and hyperparameters
        offsets: array of shape (..., 2)

    Returns:
        Array of shape (...) with values in [0, signal_variance]
    """
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape[-1] != INPUT_DIM:
        raise InvalidInputError(f"offsets must end in dimension {INPUT_DIM}")
    if not np.all(np.isfinite(offsets)):
        raise InvalidInputError("kernel inputs must be finite")

    sf2 = spec.signal_variance
    family = spec.family

    if family in (KernelFamily.SQUARED_EXPONENTIAL, KernelFamily.SQUARED_EXPONENTIAL_ARD):
        return sf2 * np.exp(-0.5 * _scaled_sq_distance(spec, offsets))

    if family == KernelFamily.MATERN52:
        s = _SQRT5 * np.sqrt(_scaled_sq_distance(spec, offsets))
        return sf2 * (1.0 + s + s * s / 3.0) * np.exp(-s)

    if family == KernelFamily.SPARSE_COMPACT:
        rho = spec.support_radius
        r = np.sqrt(np.sum(np.square(offsets), axis=-1)) / rho
        inside = r < 1.0
        rr = np.where(inside, r, 0.0)
        value = (2.0 + np.cos(_TWO_PI * rr)) / 3.0 * (1.0 - rr) + np.sin(_TWO_PI * rr) / _TWO_PI
        return np.where(inside, sf2 * np.clip(value, 0.0, 1.0), 0.0)

    raise InvalidInputError(f"unsupported kernel family {family}")


def eval_kernel(spec: KernelSpec, a, b) -> float:
    """k(a, b) for two points"""
    a = as_points(a, "a")[0]
    b = as_points(b, "b")[0]
    return float(kernel_from_offsets(spec, a - b))


def pairwise_offsets(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x[:, None, :] - y[None, :, :]


def gram(spec: KernelSpec, x, y=None) -> np.ndarray:
    """Matrix of pairwise kernel values K[i, j] = k(x_i, y_j)"""
    x = as_points(x, "x")
    y = x if y is None else as_points(y, "y")
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise InvalidInputError("gram requires non-empty point lists")
    return kernel_from_offsets(spec, pairwise_offsets(x, y))


def prior_variance(spec: KernelSpec) -> float:
    """k(x, x), identical at every location for stationary families"""
    return float(spec.signal_variance)
