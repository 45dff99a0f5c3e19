import numpy as np
import pytest

from config.settings import override_settings
from src.gp.kernels import gram
from src.gp.regression import cholesky_with_jitter, fit, nlml, predict
from src.models.base import KernelSpec, TrainingSet
from src.models.errors import IllConditionedError, InvalidInputError


@pytest.fixture
def train(rng):
    x = rng.uniform(-3, 3, size=(30, 2))
    y = np.sin(x[:, 0]) + 0.5 * np.cos(x[:, 1])
    return TrainingSet(x, y, noise_variance=0.01)


def test_prediction_interpolates_training_data(train, se_kernel):
    model = fit(train, se_kernel)
    mean, variance = predict(model, train.inputs)
    np.testing.assert_allclose(mean, train.labels, atol=0.05)
    assert np.all(variance < 0.05)


def test_variance_reverts_to_prior_far_away(train, se_kernel):
    model = fit(train, se_kernel)
    mean, variance = predict(model, [[100.0, 100.0]])
    assert mean[0] == pytest.approx(0.0, abs=1e-12)
    assert variance[0] == pytest.approx(se_kernel.signal_variance)


def test_variance_is_positive_and_bounded(train, se_kernel, rng):
    model = fit(train, se_kernel)
    _, variance = predict(model, rng.uniform(-4, 4, size=(50, 2)))
    assert np.all(variance > 0)
    assert np.all(variance <= se_kernel.signal_variance)


def test_include_noise_adds_noise_variance(train, se_kernel):
    model = fit(train, se_kernel)
    _, latent = predict(model, [[0.0, 0.0]])
    _, noisy = predict(model, [[0.0, 0.0]], include_noise=True)
    assert noisy[0] == pytest.approx(latent[0] + 0.01)


def test_matches_direct_solution(train, se_kernel):
    model = fit(train, se_kernel)
    queries = np.array([[0.5, 0.5], [-1.0, 2.0]])
    k = gram(se_kernel, train.inputs) + 0.01 * np.eye(len(train))
    k_star = gram(se_kernel, train.inputs, queries)
    expected_mean = k_star.T @ np.linalg.solve(k, train.labels)
    expected_var = se_kernel.signal_variance - np.einsum("ij,ij->j", k_star, np.linalg.solve(k, k_star))
    mean, variance = predict(model, queries)
    np.testing.assert_allclose(mean, expected_mean, rtol=1e-8)
    np.testing.assert_allclose(variance, expected_var, rtol=1e-6)


def test_nlml_matches_closed_form(train, se_kernel):
    model = fit(train, se_kernel)
    k = gram(se_kernel, train.inputs) + 0.01 * np.eye(len(train))
    sign, logdet = np.linalg.slogdet(k)
    expected = 0.5 * train.labels @ np.linalg.solve(k, train.labels) + 0.5 * logdet + 0.5 * len(train) * np.log(2 * np.pi)
    assert sign > 0
    assert nlml(model) == pytest.approx(expected, rel=1e-8)


def test_custom_targets_are_used(train, se_kernel):
    model = fit(train, se_kernel, targets=2.0 * train.labels)
    base = fit(train, se_kernel)
    np.testing.assert_allclose(model.alpha, 2.0 * base.alpha)


def test_empty_training_set_is_rejected(se_kernel):
    with pytest.raises(InvalidInputError):
        fit(TrainingSet(np.zeros((0, 2)), np.zeros(0)), se_kernel)


def test_mismatched_labels_are_rejected():
    with pytest.raises(InvalidInputError):
        TrainingSet(np.zeros((3, 2)), np.zeros(2))


def test_duplicate_inputs_without_noise_are_jittered(se_kernel):
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    model = fit(TrainingSet(x, [1.0, 1.0, -1.0], noise_variance=0.0), se_kernel)
    assert model.jitter == pytest.approx(1e-8 * se_kernel.signal_variance)
    mean, _ = predict(model, [[0.0, 0.0]])
    assert mean[0] == pytest.approx(1.0, abs=1e-3)


def test_indefinite_matrix_raises_with_pivot():
    matrix = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(IllConditionedError) as info:
        cholesky_with_jitter(matrix, 1.0)
    assert info.value.min_pivot is not None
    assert info.value.min_pivot < 0


def test_jitter_scale_comes_from_settings(se_kernel):
    override_settings(jitter_scale=1e-6)
    x = np.zeros((2, 2))
    model = fit(TrainingSet(x, [0.0, 0.0], noise_variance=0.0), se_kernel)
    assert model.jitter == pytest.approx(1e-6 * se_kernel.signal_variance)


def test_empty_query_returns_empty(train, se_kernel):
    model = fit(train, se_kernel)
    mean, variance = predict(model, np.zeros((0, 2)))
    assert mean.shape == (0,) and variance.shape == (0,)
