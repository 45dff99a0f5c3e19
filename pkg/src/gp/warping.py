"""
Warped GP machinery

A warping function g maps observations y to latent targets t = g(y). The GP
is fit on t; the marginal likelihood picks up the Jacobian of g and the
predictive mean in observation space is the Gaussian expectation of g^-1.
"""
import math
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from config.settings import get_settings
from src.gp.quadrature import gauss_hermite_rule
from src.gp.regression import GpModel, fit, nlml, predict
from src.models.base import KernelSpec, TrainingSet, WarpFamily, WarpSpec
from src.models.errors import InvalidInputError, NoBracketError


_SQRT_PI = math.sqrt(math.pi)


def _as_array(y) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("warp inputs must be finite")
    return arr, arr.ndim == 0


def _result(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def _tanh_terms(spec: WarpSpec, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = np.asarray(spec.a, dtype=float)
    b = np.asarray(spec.b, dtype=float)
    c = np.asarray(spec.c, dtype=float)
    return a, b, np.tanh(b * (y[..., None] + c))


def _poly_terms(spec: WarpSpec, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    c = np.asarray(spec.c, dtype=float)
    powers = np.arange(2, c.size + 2, dtype=float)
    return c, powers


def warp(spec: WarpSpec, y):
    """t = g(y); strictly increasing in y"""
    arr, scalar = _as_array(y)
    if spec.family == WarpFamily.IDENTITY:
        return _result(arr.copy(), scalar)
    if spec.family == WarpFamily.TANH_SUM:
        a, _, th = _tanh_terms(spec, arr)
        return _result(arr + np.sum(a * th, axis=-1), scalar)
    c, powers = _poly_terms(spec, arr)
    mag = np.abs(arr)[..., None] ** powers
    return _result(arr + np.sign(arr) * np.sum(c * mag, axis=-1), scalar)


def warp_derivative(spec: WarpSpec, y):
    """dg/dy; at least 1 for every valid spec"""
    arr, scalar = _as_array(y)
    if spec.family == WarpFamily.IDENTITY:
        return _result(np.ones_like(arr), scalar)
    if spec.family == WarpFamily.TANH_SUM:
        a, b, th = _tanh_terms(spec, arr)
        return _result(1.0 + np.sum(a * b * (1.0 - th * th), axis=-1), scalar)
    c, powers = _poly_terms(spec, arr)
    mag = np.abs(arr)[..., None] ** (powers - 1.0)
    return _result(1.0 + np.sum(c * powers * mag, axis=-1), scalar)


def inverse_warp(spec: WarpSpec, t):
    """
    y with g(y) = t, by bracket doubling, bisection and a Newton polish

    Raises:
        NoBracketError: the bracket did not close within the doubling budget
    """
    arr, scalar = _as_array(t)
    if spec.family == WarpFamily.IDENTITY:
        return _result(arr.copy(), scalar)

    target = arr.reshape(-1)
    scale = np.maximum(1.0, np.abs(target))
    max_doublings = get_settings().max_bracket_doublings

    lo = target - scale
    hi = target + scale
    step = scale.copy()
    for _ in range(max_doublings + 1):
        low_ok = warp(spec, lo) <= target
        high_ok = warp(spec, hi) >= target
        if np.all(low_ok & high_ok):
            break
        step = np.where(low_ok & high_ok, step, 2.0 * step)
        lo = np.where(low_ok, lo, target - step)
        hi = np.where(high_ok, hi, target + step)
    else:
        raise NoBracketError(
            f"no bracket for inverse warp after {max_doublings} doublings"
        )

    tol = 1e-8 * scale
    for _ in range(200):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        below = warp(spec, mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)

    y = 0.5 * (lo + hi)
    for _ in range(6):
        y = np.clip(y - (warp(spec, y) - target) / warp_derivative(spec, y), lo, hi)

    return _result(y.reshape(arr.shape), scalar)


def expected_inverse_warp(spec: WarpSpec, latent_mean, latent_variance, n_nodes: Optional[int] = None):
    """E[g^-1(t)] for t ~ N(latent_mean, latent_variance) by 1-D Gauss-Hermite"""
    mean = np.asarray(latent_mean, dtype=float)
    variance = np.broadcast_to(np.asarray(latent_variance, dtype=float), mean.shape)
    if spec.family == WarpFamily.IDENTITY:
        return mean.copy()
    if np.any(variance < 0):
        raise InvalidInputError("latent variance must be nonnegative")

    rule = gauss_hermite_rule(n_nodes or get_settings().inverse_warp_nodes)
    nodes, weights = rule.nodes, rule.weights
    spread = np.sqrt(2.0 * variance)[..., None] * nodes
    values = inverse_warp(spec, mean[..., None] + spread)
    result = values @ weights / _SQRT_PI

    degenerate = variance == 0
    if np.any(degenerate):
        result = np.where(degenerate, inverse_warp(spec, mean), result)
    return result


def wgp_nlml(train: TrainingSet, kernel: KernelSpec, warp_spec: WarpSpec) -> float:
    """NLML of the warped targets minus the log-Jacobian of the warp"""
    model = fit(train, kernel, targets=warp(warp_spec, train.labels))
    log_jacobian = float(np.sum(np.log(warp_derivative(warp_spec, train.labels))))
    return nlml(model) - log_jacobian


def fit_warped(train: TrainingSet, kernel: KernelSpec, warp_spec: WarpSpec, **kwargs) -> GpModel:
    """Fit a GP on g(y) and remember the warp for prediction"""
    model = fit(train, kernel, targets=warp(warp_spec, train.labels), **kwargs)
    return replace(model, warp=warp_spec)


def wgp_predict(model: GpModel, queries, n_nodes: Optional[int] = None):
    """
    Predict in observation space

    Returns:
        (mean_y, latent_mean, latent_variance)
    """
    latent_mean, latent_variance = predict(model, queries)
    spec = model.warp or WarpSpec.identity()
    mean_y = expected_inverse_warp(spec, latent_mean, latent_variance, n_nodes)
    return mean_y, latent_mean, latent_variance
