"""
Hyperparameter selection by NLML minimisation

Derivative-free Nelder-Mead over log-hyperparameters (and packed warp
parameters), restarted from the best point after each simplex collapse. The
noise variance of the training set is held fixed.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from config.settings import get_settings
from src.gp.regression import fit, nlml
from src.gp.warping import wgp_nlml
from src.models.base import KernelSpec, TrainingSet, WarpSpec
from src.models.errors import GpomError, InvalidInputError, OptimizationFailedError
from src.observability.monitor import get_logger


logger = get_logger(__name__)

_LOG_BOUND = 30.0


class _BudgetExhausted(Exception):
    pass


@dataclass
class _Tracker:
    budget: int
    evaluations: int = 0
    failures: int = 0
    best_value: float = np.inf
    best_theta: Optional[np.ndarray] = None
    best_index: int = -1


def optimize_hyperparameters(
    train: TrainingSet,
    kernel_init: KernelSpec,
    warp_init: Optional[WarpSpec] = None,
    budget: Optional[int] = None,
) -> Tuple[KernelSpec, Optional[WarpSpec], float]:
    """
    Minimise the (warped) NLML within an evaluation budget

    Returns:
        (kernel, warp, achieved NLML); the initial specs are returned
        unchanged when no evaluation improves on them

    Raises:
        OptimizationFailedError: every evaluation failed
    """
    settings = get_settings()
    budget = settings.optimizer_budget if budget is None else budget
    if budget < 1:
        raise InvalidInputError("optimizer budget must be at least 1")

    n_kernel = kernel_init.log_params().size
    theta0 = kernel_init.log_params()
    if warp_init is not None:
        theta0 = np.concatenate([theta0, warp_init.log_params()])

    def unpack(theta: np.ndarray):
        kernel = kernel_init.with_log_params(theta[:n_kernel])
        warp = None if warp_init is None else warp_init.with_log_params(theta[n_kernel:])
        return kernel, warp

    tracker = _Tracker(budget=budget)

    def objective(theta: np.ndarray) -> float:
        if tracker.evaluations >= tracker.budget:
            raise _BudgetExhausted()
        tracker.evaluations += 1
        theta = np.asarray(theta, dtype=float)
        try:
            if np.any(np.abs(theta) > _LOG_BOUND):
                raise InvalidInputError("log-hyperparameter out of range")
            kernel, warp = unpack(theta)
            if warp is None:
                value = nlml(fit(train, kernel))
            else:
                value = wgp_nlml(train, kernel, warp)
            if not np.isfinite(value):
                raise InvalidInputError("non-finite NLML")
        except (GpomError, ValueError, FloatingPointError, np.linalg.LinAlgError):
            tracker.failures += 1
            return np.inf
        if value < tracker.best_value:
            tracker.best_value = value
            tracker.best_theta = theta.copy()
            tracker.best_index = tracker.evaluations
        return value

    start = theta0
    restarts = 0
    try:
        while True:
            minimize(
                objective,
                start,
                method="Nelder-Mead",
                options={"maxfev": budget, "xatol": 1e-4, "fatol": 1e-6},
            )
            if tracker.best_theta is None or restarts >= settings.optimizer_restarts:
                break
            restarts += 1
            start = tracker.best_theta
    except _BudgetExhausted:
        pass

    if tracker.best_theta is None:
        raise OptimizationFailedError(
            f"all {tracker.evaluations} NLML evaluations failed",
            best=(kernel_init, warp_init),
        )

    if tracker.best_index == 1:
        kernel, warp = kernel_init, warp_init
    else:
        kernel, warp = unpack(tracker.best_theta)

    logger.info(
        "hyperparameters_optimised",
        evaluations=tracker.evaluations,
        failures=tracker.failures,
        restarts=restarts,
        nlml=tracker.best_value,
    )
    return kernel, warp, float(tracker.best_value)
