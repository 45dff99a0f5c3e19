"""
Exact GP regression

Fitting factorises K + sigma_n^2 I once with a Cholesky decomposition; the
factor and the weight vector are reused by every prediction and by the
marginal likelihood.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from config.settings import get_settings
from src.gp.kernels import gram
from src.models.base import KernelSpec, TrainingSet, WarpSpec, as_points
from src.models.errors import IllConditionedError, InvalidInputError
from src.observability.monitor import get_logger


logger = get_logger(__name__)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

CrossCovariance = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GpModel:
    """A fitted GP; immutable and safe to share between threads"""
    train: TrainingSet
    kernel: KernelSpec
    chol: np.ndarray
    alpha: np.ndarray
    targets: np.ndarray
    jitter: float = 0.0
    warp: Optional[WarpSpec] = None
    cross_covariance: Optional[CrossCovariance] = None

    @property
    def size(self) -> int:
        return self.alpha.shape[0]


def _min_pivot(matrix: np.ndarray) -> float:
    _, d, _ = linalg.ldl(matrix, lower=True)
    return float(np.min(np.diag(d)))


def cholesky_with_jitter(matrix: np.ndarray, signal_variance: float) -> Tuple[np.ndarray, float]:
    """
    Lower Cholesky factor of a symmetric matrix

    On failure the diagonal is shifted once by jitter_scale * signal_variance;
    a second failure raises IllConditionedError naming the minimum LDL pivot.
    """
    jitter = 0.0
    for attempt in range(2):
        try:
            chol = linalg.cholesky(
                matrix + jitter * np.eye(matrix.shape[0]), lower=True, check_finite=False
            )
            if np.all(np.diag(chol) > 0) and np.all(np.isfinite(chol)):
                if jitter:
                    logger.warning("cholesky_jitter_applied", jitter=jitter, size=matrix.shape[0])
                return chol, jitter
        except linalg.LinAlgError:
            pass
        jitter = get_settings().jitter_scale * signal_variance
    raise IllConditionedError(
        f"cholesky factorisation of a {matrix.shape[0]}x{matrix.shape[0]} matrix failed",
        min_pivot=_min_pivot(matrix),
    )


def fit(
    train: TrainingSet,
    kernel: KernelSpec,
    targets: Optional[np.ndarray] = None,
    train_covariance: Optional[np.ndarray] = None,
    cross_covariance: Optional[CrossCovariance] = None,
) -> GpModel:
    """
    Factorise the training covariance and solve for the weight vector

    Args:
        train: training set; its noise variance is added to the diagonal
        kernel: covariance function
        targets: regression targets, defaults to the labels (warped GPs pass g(y))
        train_covariance: precomputed K(X, X), e.g. an expected-kernel matrix
        cross_covariance: callable returning K(X, X*) for queries X*
    """
    if len(train) == 0:
        raise InvalidInputError("cannot fit a GP on an empty training set")

    t = train.labels if targets is None else np.asarray(targets, dtype=float).reshape(-1)
    if t.shape[0] != len(train):
        raise InvalidInputError("targets and training inputs differ in length")

    if train_covariance is None:
        k = gram(kernel, train.inputs)
    else:
        k = np.asarray(train_covariance, dtype=float)
        if k.shape != (len(train), len(train)):
            raise InvalidInputError(f"training covariance has shape {k.shape}")

    system = k + train.noise_variance * np.eye(len(train))
    chol, jitter = cholesky_with_jitter(system, kernel.signal_variance)
    alpha = linalg.cho_solve((chol, True), t, check_finite=False)

    return GpModel(
        train=train,
        kernel=kernel,
        chol=chol,
        alpha=alpha,
        targets=t,
        jitter=jitter,
        cross_covariance=cross_covariance,
    )


def _cross(model: GpModel, queries: np.ndarray) -> np.ndarray:
    if model.cross_covariance is not None:
        return model.cross_covariance(queries)
    return gram(model.kernel, model.train.inputs, queries)


def predict(model: GpModel, queries, include_noise: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Posterior mean and variance of the latent function at deterministic queries

    Returns:
        (mean, variance) arrays of length m; variance is floored to stay positive
    """
    queries = as_points(queries, "queries")
    if queries.shape[0] == 0:
        return np.zeros(0), np.zeros(0)

    k_star = _cross(model, queries)
    mean = k_star.T @ model.alpha

    v = linalg.solve_triangular(model.chol, k_star, lower=True, check_finite=False)
    prior = model.kernel.signal_variance
    variance = prior - np.sum(v * v, axis=0)
    floor = np.finfo(float).eps * prior
    variance = np.clip(variance, floor, prior)
    if include_noise:
        variance = variance + model.train.noise_variance
    return mean, variance


def nlml(model: GpModel) -> float:
    """Negative log marginal likelihood of the model's targets"""
    data_fit = 0.5 * float(model.targets @ model.alpha)
    log_det = float(np.sum(np.log(np.diag(model.chol))))
    return data_fit + log_det + model.size * _HALF_LOG_2PI
