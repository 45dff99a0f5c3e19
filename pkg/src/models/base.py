"""
Base GP Models and Interfaces
Core value types shared by the kernel, regression, warping and
uncertain-input modules
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.errors import InvalidInputError


INPUT_DIM = 2
LOG_FLOOR = 1e-10


class KernelFamily(str, Enum):
    """Covariance function families"""
    SQUARED_EXPONENTIAL = "squared_exponential"
    SQUARED_EXPONENTIAL_ARD = "squared_exponential_ard"
    MATERN52 = "matern52"
    SPARSE_COMPACT = "sparse_compact"


class WarpFamily(str, Enum):
    """Monotone warping function families"""
    TANH_SUM = "tanh_sum"
    POLYNOMIAL = "polynomial"
    IDENTITY = "identity"


def _all_finite(values) -> bool:
    return all(math.isfinite(v) for v in values)


class KernelSpec(BaseModel):
    """Covariance family plus hyperparameters; immutable"""
    model_config = ConfigDict(frozen=True)

    family: KernelFamily = KernelFamily.SQUARED_EXPONENTIAL
    signal_variance: float = Field(1.0, gt=0, allow_inf_nan=False)
    length_scales: Tuple[float, ...] = (1.0,)
    support_radius: Optional[float] = Field(None, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_hyperparameters(self):
        if not self.length_scales or not _all_finite(self.length_scales):
            raise ValueError("length scales must be finite")
        if min(self.length_scales) <= 0:
            raise ValueError("length scales must be strictly positive")
        if self.family == KernelFamily.SQUARED_EXPONENTIAL_ARD:
            if len(self.length_scales) != INPUT_DIM:
                raise ValueError(
                    f"ARD kernels need {INPUT_DIM} length scales, "
                    f"got {len(self.length_scales)}"
                )
        elif len(self.length_scales) != 1:
            raise ValueError("isotropic kernels take exactly one length scale")
        if self.family == KernelFamily.SPARSE_COMPACT and self.support_radius is None:
            raise ValueError("sparse kernel requires a support radius")
        return self

    @property
    def is_sparse(self) -> bool:
        return self.family == KernelFamily.SPARSE_COMPACT

    def log_params(self) -> np.ndarray:
        """Hyperparameters in log-space, in optimisation order"""
        if self.is_sparse:
            values = [self.signal_variance, self.support_radius]
        else:
            values = [self.signal_variance, *self.length_scales]
        return np.log(np.asarray(values, dtype=float))

    def with_log_params(self, theta: np.ndarray) -> "KernelSpec":
        """Inverse of log_params"""
        values = np.exp(np.asarray(theta, dtype=float))
        if self.is_sparse:
            return self.model_copy(update={
                "signal_variance": float(values[0]),
                "support_radius": float(values[1]),
            })
        return self.model_copy(update={
            "signal_variance": float(values[0]),
            "length_scales": tuple(float(v) for v in values[1:]),
        })


class WarpSpec(BaseModel):
    """
    Warping family plus coefficients psi = [a, b, c]

    TanhSum uses a, b, c (one entry per step); Polynomial uses c, where
    c[i] multiplies sgn(y)|y|^(i+2), so a degree-d polynomial carries d-1
    coefficients.
    """
    model_config = ConfigDict(frozen=True)

    family: WarpFamily = WarpFamily.IDENTITY
    a: Tuple[float, ...] = ()
    b: Tuple[float, ...] = ()
    c: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_coefficients(self):
        for name in ("a", "b", "c"):
            if not _all_finite(getattr(self, name)):
                raise ValueError(f"warp coefficients {name} must be finite")
        if self.family == WarpFamily.TANH_SUM:
            if not self.a or not (len(self.a) == len(self.b) == len(self.c)):
                raise ValueError("tanh warp needs equal-length a, b, c with at least one step")
            if min(self.a) < 0 or min(self.b) < 0:
                raise ValueError("tanh warp requires a >= 0 and b >= 0")
        elif self.family == WarpFamily.POLYNOMIAL:
            if not self.c:
                raise ValueError("polynomial warp needs degree >= 2")
            if self.a or self.b:
                raise ValueError("polynomial warp only uses c")
            if min(self.c) < 0:
                raise ValueError("polynomial warp requires c >= 0")
        elif self.a or self.b or self.c:
            raise ValueError("identity warp takes no coefficients")
        return self

    @property
    def steps(self) -> int:
        """Number of tanh steps, or polynomial degree"""
        if self.family == WarpFamily.TANH_SUM:
            return len(self.a)
        if self.family == WarpFamily.POLYNOMIAL:
            return len(self.c) + 1
        return 0

    @classmethod
    def identity(cls) -> "WarpSpec":
        return cls(family=WarpFamily.IDENTITY)

    @classmethod
    def tanh(cls, steps: int, a=None, b=None, c=None) -> "WarpSpec":
        if steps < 1:
            raise InvalidInputError("tanh warp needs at least one step")
        return cls(
            family=WarpFamily.TANH_SUM,
            a=tuple(a) if a is not None else (0.0,) * steps,
            b=tuple(b) if b is not None else (1.0,) * steps,
            c=tuple(c) if c is not None else tuple(np.linspace(-1.0, 1.0, steps)) if steps > 1 else (0.0,),
        )

    @classmethod
    def polynomial(cls, degree: int, c=None) -> "WarpSpec":
        if degree < 2:
            raise InvalidInputError("polynomial warp degree must be at least 2")
        return cls(
            family=WarpFamily.POLYNOMIAL,
            c=tuple(c) if c is not None else (0.0,) * (degree - 1),
        )

    def log_params(self) -> np.ndarray:
        """Packed warp parameters: logs of the nonnegative ones, raw offsets"""
        if self.family == WarpFamily.TANH_SUM:
            return np.concatenate([
                np.log(np.maximum(self.a, LOG_FLOOR)),
                np.log(np.maximum(self.b, LOG_FLOOR)),
                np.asarray(self.c, dtype=float),
            ])
        if self.family == WarpFamily.POLYNOMIAL:
            return np.log(np.maximum(self.c, LOG_FLOOR))
        return np.zeros(0)

    def with_log_params(self, psi: np.ndarray) -> "WarpSpec":
        psi = np.asarray(psi, dtype=float)
        if self.family == WarpFamily.TANH_SUM:
            n = self.steps
            return self.model_copy(update={
                "a": tuple(float(v) for v in np.exp(psi[:n])),
                "b": tuple(float(v) for v in np.exp(psi[n:2 * n])),
                "c": tuple(float(v) for v in psi[2 * n:]),
            })
        if self.family == WarpFamily.POLYNOMIAL:
            return self.model_copy(update={"c": tuple(float(v) for v in np.exp(psi))})
        return self


def as_points(points, name: str = "points") -> np.ndarray:
    """Coerce to an (n, 2) float array of finite coordinates"""
    array = np.asarray(points, dtype=float)
    if array.ndim == 1 and array.shape[0] == INPUT_DIM:
        array = array.reshape(1, INPUT_DIM)
    if array.ndim != 2 or array.shape[1] != INPUT_DIM:
        raise InvalidInputError(f"{name} must have shape (n, {INPUT_DIM}), got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{name} contain non-finite coordinates")
    return array


def check_covariance(covariance: np.ndarray, name: str = "covariance", tol: float = 1e-12) -> np.ndarray:
    """Validate a symmetric positive semi-definite matrix (or stack of them)"""
    cov = np.asarray(covariance, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if np.max(np.abs(cov - np.swapaxes(cov, -1, -2)), initial=0.0) > tol * max(1.0, float(np.max(np.abs(cov), initial=0.0))):
        raise InvalidInputError(f"{name} is not symmetric")
    if cov.size and np.min(np.linalg.eigvalsh(cov)) < -tol * max(1.0, float(np.max(np.abs(cov)))):
        raise InvalidInputError(f"{name} is not positive semi-definite")
    return cov


@dataclass(frozen=True)
class TrainingSet:
    """Labeled points D = {(x_i, y_i)} with optional per-point input covariance"""
    inputs: np.ndarray
    labels: np.ndarray
    noise_variance: float = 0.01
    input_covariances: Optional[np.ndarray] = None

    def __post_init__(self):
        inputs = as_points(self.inputs, "training inputs")
        labels = np.asarray(self.labels, dtype=float).reshape(-1)
        if labels.shape[0] != inputs.shape[0]:
            raise InvalidInputError(
                f"{inputs.shape[0]} inputs but {labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(labels)):
            raise InvalidInputError("labels must be finite")
        if not math.isfinite(self.noise_variance) or self.noise_variance < 0:
            raise InvalidInputError("noise variance must be finite and nonnegative")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)
        if self.input_covariances is not None:
            covs = np.asarray(self.input_covariances, dtype=float)
            if covs.shape != (inputs.shape[0], INPUT_DIM, INPUT_DIM):
                raise InvalidInputError(f"input covariances have shape {covs.shape}")
            object.__setattr__(self, "input_covariances", check_covariance(covs, "input covariances"))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def is_uncertain(self) -> bool:
        return self.input_covariances is not None

    def subset(self, index) -> "TrainingSet":
        return TrainingSet(
            inputs=self.inputs[index],
            labels=self.labels[index],
            noise_variance=self.noise_variance,
            input_covariances=None if self.input_covariances is None else self.input_covariances[index],
        )


@dataclass(frozen=True)
class UncertainPoint:
    """Gaussian input x ~ N(mean, covariance)"""
    mean: np.ndarray
    covariance: np.ndarray = field(default_factory=lambda: np.zeros((INPUT_DIM, INPUT_DIM)))

    def __post_init__(self):
        object.__setattr__(self, "mean", as_points(self.mean, "mean")[0])
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (INPUT_DIM, INPUT_DIM):
            raise InvalidInputError(f"covariance must be {INPUT_DIM}x{INPUT_DIM}")
        object.__setattr__(self, "covariance", check_covariance(cov))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for the weight exp(-u^2)"""
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return int(self.nodes.shape[0])
