import numpy as np
import pytest

from src.gp.optimize import optimize_hyperparameters
from src.gp.regression import fit, nlml
from src.gp.warping import wgp_nlml
from src.models.base import KernelSpec, TrainingSet, WarpSpec
from src.models.errors import InvalidInputError, OptimizationFailedError


@pytest.fixture
def train(rng):
    x = rng.uniform(-3, 3, size=(40, 2))
    y = np.sin(1.5 * x[:, 0]) + 0.05 * rng.standard_normal(40)
    return TrainingSet(x, y, noise_variance=0.0025)


def test_optimum_never_worse_than_start(train):
    start = KernelSpec(signal_variance=5.0, length_scales=(5.0,))
    kernel, warp, value = optimize_hyperparameters(train, start, budget=150)
    assert warp is None
    assert value <= nlml(fit(train, start)) + 1e-9
    assert value == pytest.approx(nlml(fit(train, kernel)))


def test_learns_a_shorter_length_scale(train):
    kernel, _, _ = optimize_hyperparameters(train, KernelSpec(length_scales=(5.0,)), budget=200)
    assert kernel.length_scales[0] < 5.0


def test_warped_search_reports_warped_objective(train):
    kernel, warp, value = optimize_hyperparameters(
        train, KernelSpec(), WarpSpec.tanh(2), budget=120
    )
    assert warp is not None and warp.steps == 2
    assert value == pytest.approx(wgp_nlml(train, kernel, warp))


def test_single_evaluation_returns_the_start(train):
    start = KernelSpec(signal_variance=2.0, length_scales=(1.5,))
    kernel, warp, value = optimize_hyperparameters(train, start, budget=1)
    assert kernel == start
    assert value == pytest.approx(nlml(fit(train, start)))


def test_runs_are_deterministic(train):
    first = optimize_hyperparameters(train, KernelSpec(), budget=80)
    second = optimize_hyperparameters(train, KernelSpec(), budget=80)
    assert first[0] == second[0]
    assert first[2] == second[2]


def test_zero_budget_is_rejected(train):
    with pytest.raises(InvalidInputError):
        optimize_hyperparameters(train, KernelSpec(), budget=0)


def test_all_failures_raise_with_the_start(train):
    # log-hyperparameters beyond the search bound fail on every evaluation
    start = KernelSpec(signal_variance=float(np.exp(40.0)), length_scales=(1.0,))
    with pytest.raises(OptimizationFailedError) as info:
        optimize_hyperparameters(train, start, budget=5)
    assert info.value.best[0] == start
