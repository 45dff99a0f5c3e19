"""
Uncertain training inputs

Expected kernels k~(p, q) = E[k(x_p, x_q)] for Gaussian inputs, by Monte-Carlo
or Gauss-Hermite quadrature, and the unscented transform that pushes robot
frame points through an uncertain pose.

Gauss-Hermite normalisation: with x = m + L u and L L^T = 2 Sigma the
expectation is pi^(-d/2) * sum_j w_j k(m + L u_j), which reproduces k exactly
as Sigma -> 0 because the 1-D weights sum to sqrt(pi).
"""
import math
from functools import partial
from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import get_settings
from src.gp.kernels import kernel_from_offsets
from src.gp.quadrature import tensor_rule
from src.gp.regression import GpModel, fit
from src.models.base import INPUT_DIM, KernelSpec, QuadratureRule, TrainingSet, UncertainPoint, as_points
from src.models.errors import IllConditionedError, InvalidInputError
from src.models.robot import PoseBelief
from src.observability.monitor import RunCounters, get_logger


logger = get_logger(__name__)

Endpoint = Union[UncertainPoint, np.ndarray, tuple, list]


class ExpectationMethod(BaseModel):
    """How expected kernels are integrated"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["gh", "mc"] = "gh"
    order: int = Field(9, ge=1, le=40)
    n_samples: int = Field(10, ge=1)
    seed: int = 0
    joint_product: bool = False


def _endpoint(q: Endpoint) -> UncertainPoint:
    if isinstance(q, UncertainPoint):
        return q
    return UncertainPoint(mean=np.asarray(q, dtype=float))


def sqrt_2x2(covariance: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """
    Lower-triangular L with L L^T = covariance for a stack of 2x2 PSD matrices

    Semidefinite inputs are allowed; a zero leading entry gives a zero column.
    """
    cov = np.asarray(covariance, dtype=float)
    a = cov[..., 0, 0]
    b = cov[..., 1, 0]
    c = cov[..., 1, 1]
    scale = np.maximum(np.abs(cov).max(axis=(-2, -1)), 1.0)
    if np.any(a < -tol * scale) or np.any(c < -tol * scale):
        raise IllConditionedError("covariance has a negative diagonal entry")
    l11 = np.sqrt(np.maximum(a, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        l21 = np.where(l11 > 0, b / np.where(l11 > 0, l11, 1.0), 0.0)
    schur = c - l21 * l21
    if np.any(schur < -tol * scale) or np.any((l11 == 0) & (np.abs(b) > tol * scale)):
        raise IllConditionedError(
            "covariance factorisation failed",
            min_pivot=float(np.min(schur)),
        )
    out = np.zeros(cov.shape)
    out[..., 0, 0] = l11
    out[..., 1, 0] = l21
    out[..., 1, 1] = np.sqrt(np.maximum(schur, 0.0))
    return out


def _gh_expectation(
    spec: KernelSpec,
    offsets: np.ndarray,
    covariances: np.ndarray,
    order: int,
) -> np.ndarray:
    """E[k(d)] for d ~ N(offsets, covariances), stacked over leading axes"""
    nodes, weights = tensor_rule(order, INPUT_DIM)
    factors = sqrt_2x2(2.0 * covariances)
    shifted = offsets[..., None, :] + np.einsum("...ij,kj->...ki", factors, nodes)
    values = kernel_from_offsets(spec, shifted) @ weights / math.pi
    exact = kernel_from_offsets(spec, offsets)
    zero = ~np.any(covariances != 0, axis=(-2, -1))
    return np.where(zero, exact, values)


def _gh_joint_expectation(
    spec: KernelSpec,
    offsets: np.ndarray,
    cov_p: np.ndarray,
    cov_q: np.ndarray,
    order: int,
) -> np.ndarray:
    """Four-dimensional product rule over both endpoints"""
    nodes, weights = tensor_rule(order, INPUT_DIM)
    lp = sqrt_2x2(2.0 * cov_p)
    lq = sqrt_2x2(2.0 * cov_q)
    dp = np.einsum("...ij,kj->...ki", lp, nodes)
    dq = np.einsum("...ij,kj->...ki", lq, nodes)
    shifted = offsets[..., None, None, :] + dp[..., :, None, :] - dq[..., None, :, :]
    values = np.einsum("...ab,a,b->...", kernel_from_offsets(spec, shifted), weights, weights)
    values = values / (math.pi * math.pi)
    exact = kernel_from_offsets(spec, offsets)
    zero = ~np.any((cov_p != 0) | (cov_q != 0), axis=(-2, -1))
    return np.where(zero, exact, values)


def expected_kernel_gh(
    spec: KernelSpec,
    p: UncertainPoint,
    q: Endpoint,
    rule: Union[QuadratureRule, int] = 9,
    joint_product: bool = False,
) -> float:
    """
    Gauss-Hermite expected kernel

    When both endpoints are uncertain the separation x_p - x_q is Gaussian
    with covariance Sigma_p + Sigma_q; that 2-D rule is used unless
    joint_product requests the full product rule over both endpoints.
    """
    order = rule.order if isinstance(rule, QuadratureRule) else int(rule)
    q = _endpoint(q)
    offset = p.mean - q.mean
    if joint_product:
        return float(_gh_joint_expectation(spec, offset, p.covariance, q.covariance, order))
    return float(_gh_expectation(spec, offset, p.covariance + q.covariance, order))


def _sample(rng: np.random.Generator, mean: np.ndarray, factor: np.ndarray, shape) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (INPUT_DIM,))
    return mean + np.einsum("...ij,...j->...i", factor, z)


def expected_kernel_mc(
    spec: KernelSpec,
    p: UncertainPoint,
    q: Endpoint,
    n_samples: int,
    seed: int = 0,
    return_stderr: bool = False,
):
    """
    Monte-Carlo expected kernel over independent draws of both endpoints

    Returns:
        the estimate, or (estimate, standard error) with return_stderr
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be at least 1")
    q = _endpoint(q)
    if not np.any(p.covariance) and not np.any(q.covariance):
        value = float(kernel_from_offsets(spec, p.mean - q.mean))
        return (value, 0.0) if return_stderr else value

    rng = np.random.default_rng(seed)
    xp = _sample(rng, p.mean, sqrt_2x2(p.covariance), (n_samples,))
    xq = _sample(rng, q.mean, sqrt_2x2(q.covariance), (n_samples,))
    values = kernel_from_offsets(spec, xp - xq)
    value = float(np.mean(values))
    if not return_stderr:
        return value
    stderr = float(np.std(values, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return value, stderr


# ============================================================================
# EXPECTED GRAM MATRICES
# ============================================================================

def _train_rows(
    spec: KernelSpec,
    means: np.ndarray,
    covs: np.ndarray,
    rows: range,
    method: ExpectationMethod,
) -> np.ndarray:
    """Upper-triangle block rows[i] x [rows[i]+1, n) of the train-train expectation"""
    n = means.shape[0]
    block = np.zeros((len(rows), n))
    if method.kind == "gh":
        offsets = means[rows.start:rows.stop, None, :] - means[None, :, :]
        cov_p = np.broadcast_to(covs[rows.start:rows.stop, None], offsets.shape[:2] + (2, 2))
        cov_q = np.broadcast_to(covs[None, :], offsets.shape[:2] + (2, 2))
        if method.joint_product:
            block = _gh_joint_expectation(spec, offsets, cov_p, cov_q, method.order)
        else:
            block = _gh_expectation(spec, offsets, cov_p + cov_q, method.order)
        return block

    factors = sqrt_2x2(covs)
    for local, row in enumerate(rows):
        cols = np.arange(row + 1, n)
        if cols.size == 0:
            continue
        rng = np.random.default_rng([method.seed, 0, row])
        shape = (cols.size, method.n_samples)
        xp = _sample(rng, means[row], factors[row], shape)
        xq = _sample(rng, means[cols][:, None, :], factors[cols][:, None], shape)
        values = kernel_from_offsets(spec, xp - xq).mean(axis=1)
        zero = ~np.any(covs[row]) & ~np.any(covs[cols], axis=(-2, -1))
        block[local, cols] = np.where(zero, kernel_from_offsets(spec, means[row] - means[cols]), values)
    return block


def _cross_rows(
    spec: KernelSpec,
    means: np.ndarray,
    covs: np.ndarray,
    queries: np.ndarray,
    rows: range,
    method: ExpectationMethod,
) -> np.ndarray:
    """Training rows x deterministic queries; only the training endpoint is integrated"""
    offsets = means[rows.start:rows.stop, None, :] - queries[None, :, :]
    if method.kind == "gh":
        cov = np.broadcast_to(covs[rows.start:rows.stop, None], offsets.shape[:2] + (2, 2))
        return _gh_expectation(spec, offsets, cov, method.order)

    factors = sqrt_2x2(covs)
    block = np.empty(offsets.shape[:2])
    for local, row in enumerate(rows):
        if not np.any(covs[row]):
            block[local] = kernel_from_offsets(spec, offsets[local])
            continue
        rng = np.random.default_rng([method.seed, 1, row])
        xp = _sample(rng, means[row], factors[row], (queries.shape[0], method.n_samples))
        block[local] = kernel_from_offsets(spec, xp - queries[:, None, :]).mean(axis=1)
    return block


def _chunks(n: int, per_row_cost: int = 1):
    size = max(1, get_settings().gram_chunk_rows // per_row_cost)
    for start in range(0, n, size):
        yield range(start, min(n, start + size))


def repair_psd(matrix: np.ndarray, counters: Optional[RunCounters] = None) -> np.ndarray:
    """Clip negative eigenvalues of a symmetric matrix when they exceed the tolerance"""
    tol = get_settings().psd_clip_tolerance
    eigvals, eigvecs = np.linalg.eigh(matrix)
    if eigvals[0] >= -tol:
        return matrix
    logger.warning("psd_clipped", min_eigenvalue=float(eigvals[0]), size=matrix.shape[0])
    if counters is not None:
        counters.psd_clips += 1
    repaired = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
    return 0.5 * (repaired + repaired.T)


def expected_train_gram(
    spec: KernelSpec,
    means,
    covariances: np.ndarray,
    method: ExpectationMethod,
    counters: Optional[RunCounters] = None,
) -> np.ndarray:
    """Expected covariance among uncertain training inputs, symmetric and PSD"""
    means = as_points(means, "training inputs")
    covs = np.asarray(covariances, dtype=float)
    n = means.shape[0]
    if n == 0:
        raise InvalidInputError("expected gram requires at least one training input")
    upper = np.zeros((n, n))
    cost = method.order ** 2 if method.kind == "gh" and method.joint_product else 1
    for rows in _chunks(n, cost):
        block = _train_rows(spec, means, covs, rows, method)
        upper[rows.start:rows.stop] = block
    upper = np.triu(upper, k=1)
    gram = upper + upper.T
    np.fill_diagonal(gram, spec.signal_variance)
    return repair_psd(gram, counters)


def expected_cross_gram(
    spec: KernelSpec,
    means,
    covariances: np.ndarray,
    queries,
    method: ExpectationMethod,
) -> np.ndarray:
    means = as_points(means, "training inputs")
    queries = as_points(queries, "queries")
    covs = np.asarray(covariances, dtype=float)
    out = np.empty((means.shape[0], queries.shape[0]))
    for rows in _chunks(means.shape[0]):
        out[rows.start:rows.stop] = _cross_rows(spec, means, covs, queries, rows, method)
    return out


def expected_gram(
    spec: KernelSpec,
    points: TrainingSet,
    queries,
    method: ExpectationMethod,
    counters: Optional[RunCounters] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """(K~ train-train, K~ train-query) for a training set with input covariances"""
    covs = _covariances(points)
    k_tt = expected_train_gram(spec, points.inputs, covs, method, counters)
    k_tq = expected_cross_gram(spec, points.inputs, covs, queries, method)
    return k_tt, k_tq


def _covariances(train: TrainingSet) -> np.ndarray:
    if train.input_covariances is None:
        return np.zeros((len(train), INPUT_DIM, INPUT_DIM))
    return train.input_covariances


def fit_expected(
    train: TrainingSet,
    kernel: KernelSpec,
    method: ExpectationMethod,
    targets: Optional[np.ndarray] = None,
    counters: Optional[RunCounters] = None,
) -> GpModel:
    """GP whose training and cross covariances are expected kernels"""
    covs = _covariances(train)
    k_tt = expected_train_gram(kernel, train.inputs, covs, method, counters)
    cross = partial(expected_cross_gram, kernel, train.inputs, covs, method=method)
    return fit(train, kernel, targets=targets, train_covariance=k_tt, cross_covariance=cross)


# ============================================================================
# UNSCENTED TRANSFORM
# ============================================================================

def _matrix_sqrt(covariance: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(covariance)
        if eigvals[0] < -1e-10 * max(1.0, float(eigvals[-1])):
            raise IllConditionedError(
                "pose covariance is not positive semi-definite",
                min_pivot=float(eigvals[0]),
            ) from None
        return eigvecs * np.sqrt(np.maximum(eigvals, 0.0))


def unscented_transform(local_points, pose: PoseBelief) -> Tuple[np.ndarray, np.ndarray]:
    """
    Push robot-frame points through global = R(theta) local + t under pose noise

    Uses 2L+1 = 7 sigma points of the pose distribution. Sigma-point
    deviations are formed analytically relative to the mean-pose image so
    the transform stays exact for pure translation noise.

    Returns:
        (means (n, 2), covariances (n, 2, 2)) of the global points
    """
    settings = get_settings()
    local = as_points(local_points, "local points")
    dim = 3
    alpha, beta, kappa = settings.ut_alpha, settings.ut_beta, settings.ut_kappa
    lam = alpha * alpha * (dim + kappa) - dim
    spread = dim + lam
    wm0 = lam / spread
    wc0 = wm0 + (1.0 - alpha * alpha + beta)
    wi = 0.5 / spread

    base = pose.to_global(local)
    sqrt_cov = _matrix_sqrt(pose.covariance) * math.sqrt(spread)
    if not np.any(sqrt_cov):
        return base, np.zeros((local.shape[0], INPUT_DIM, INPUT_DIM))

    rot = pose.rotation()
    rotated_local = local @ rot.T

    def deviation(delta: np.ndarray) -> np.ndarray:
        dtheta = delta[2]
        half = math.sin(0.5 * dtheta)
        cos_m1 = -2.0 * half * half
        sin_d = math.sin(dtheta)
        # (R(dtheta) - I) applied to the rotated local points
        dx = cos_m1 * rotated_local[:, 0] - sin_d * rotated_local[:, 1]
        dy = sin_d * rotated_local[:, 0] + cos_m1 * rotated_local[:, 1]
        return np.column_stack([dx + delta[0], dy + delta[1]])

    plus = np.stack([deviation(sqrt_cov[:, k]) for k in range(dim)])
    minus = np.stack([deviation(-sqrt_cov[:, k]) for k in range(dim)])
    mean_dev = wi * np.sum(plus + minus, axis=0)

    centered_p = plus - mean_dev
    centered_m = minus - mean_dev
    cov = wc0 * np.einsum("ni,nj->nij", mean_dev, mean_dev)
    cov = cov + wi * (
        np.einsum("kni,knj->nij", centered_p, centered_p)
        + np.einsum("kni,knj->nij", centered_m, centered_m)
    )
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    return base + mean_dev, cov
