import numpy as np
import pytest

from src.mapping.occupancy import (
    FREE,
    OCCUPIED,
    UNKNOWN,
    OccupancyMap,
    ReferenceGrid,
    SubMap,
    bcm_fuse,
    expected_submap_fuse,
    mixture_moments,
    sample_poses,
    squash,
    squash_values,
)
from src.models.errors import InvalidInputError
from src.models.robot import PoseBelief
from src.observability.monitor import RunCounters


@pytest.fixture
def grid():
    return OccupancyMap((0.0, 0.0), 1.0, 4, 3, prior_variance=2.0)


def test_new_map_holds_the_prior(grid):
    assert grid.n_cells == 12
    assert np.all(grid.mean == 0.0) and np.all(grid.variance == 2.0)
    assert not grid.observed.any()
    np.testing.assert_array_equal(squash(grid), 0.5)


def test_centers_are_row_major(grid):
    centers = grid.centers()
    np.testing.assert_allclose(centers[0], [0.5, 0.5])
    np.testing.assert_allclose(centers[1], [1.5, 0.5])
    np.testing.assert_allclose(centers[4], [0.5, 1.5])


def test_from_bounds_covers_the_extent():
    grid = OccupancyMap.from_bounds((-6.0, -6.0, 6.0, 6.0), 0.5, prior_variance=1.0)
    assert (grid.width, grid.height) == (24, 24)
    assert grid.extent == (-6.0, -6.0, 6.0, 6.0)


def test_bcm_single_observation_matches_formula(grid):
    sub = SubMap([[1.5, 0.5]], [0.8], [0.5])
    bcm_fuse(grid, sub)
    precision = 1 / 2.0 + (1 / 0.5 - 1 / 2.0)
    assert grid.variance[1] == pytest.approx(1 / precision)
    assert grid.mean[1] == pytest.approx((0.8 / 0.5) / precision)
    assert grid.observed[1] and grid.observed.sum() == 1


def test_bcm_fusion_is_order_independent(grid):
    first = SubMap([[0.5, 0.5], [1.5, 1.5]], [1.0, -0.5], [0.4, 0.9])
    second = SubMap([[0.5, 0.5], [2.5, 2.5]], [-0.2, 0.7], [0.6, 0.3])
    other = grid.copy()
    bcm_fuse(grid, first)
    bcm_fuse(grid, second)
    bcm_fuse(other, second)
    bcm_fuse(other, first)
    np.testing.assert_allclose(grid.mean, other.mean)
    np.testing.assert_allclose(grid.variance, other.variance)


def test_repeated_points_in_one_submap_accumulate(grid):
    once = grid.copy()
    bcm_fuse(once, SubMap([[0.5, 0.5]], [1.0], [0.5]))
    bcm_fuse(once, SubMap([[0.5, 0.5]], [1.0], [0.5]))
    bcm_fuse(grid, SubMap([[0.5, 0.5], [0.6, 0.4]], [1.0, 1.0], [0.5, 0.5]))
    assert grid.mean[0] == pytest.approx(once.mean[0])
    assert grid.variance[0] == pytest.approx(once.variance[0])


def test_fusion_reduces_variance(grid):
    bcm_fuse(grid, SubMap([[3.5, 2.5]], [0.3], [1.5]))
    assert grid.variance[11] < 2.0


def test_points_outside_are_dropped_and_counted(grid):
    counters = RunCounters()
    bcm_fuse(grid, SubMap([[10.0, 10.0], [0.5, 0.5]], [1.0, 1.0], [0.5, 0.5]), counters)
    assert counters.dropped_points == 1
    assert grid.observed.sum() == 1


def test_degenerate_fusion_is_floored_and_counted(grid):
    counters = RunCounters()
    # sub-map variance above the prior drives the precision negative
    bcm_fuse(grid, SubMap([[0.5, 0.5]], [1.0], [0.4]), counters)
    bcm_fuse(grid, SubMap([[0.5, 0.5]] * 3, [0.0] * 3, [1e6] * 3), counters)
    bcm_fuse(grid, SubMap([[0.5, 0.5]] * 4, [0.0] * 4, [1e6] * 4), counters)
    assert counters.degenerate_fusions >= 1
    assert np.all(grid.variance > 0) and np.all(np.isfinite(grid.mean))


def test_submap_validation():
    with pytest.raises(InvalidInputError):
        SubMap([[0.0, 0.0]], [1.0], [0.0])
    with pytest.raises(InvalidInputError):
        SubMap([[0.0, 0.0]], [1.0, 2.0], [1.0])
    assert len(SubMap(np.zeros((0, 2)), np.zeros(0), np.zeros(0))) == 0


def test_mixture_moments():
    mean, var = mixture_moments([[0.0], [2.0]], [[1.0], [3.0]])
    assert mean[0] == pytest.approx(1.0)
    assert var[0] == pytest.approx(0.5 * (1 + 1) + 0.5 * (3 + 1))


def test_mixture_of_one_or_identical_components_is_unchanged():
    mu = np.array([[0.123456789]])
    var = np.array([[0.3]])
    assert mixture_moments(mu, var)[0][0] == mu[0, 0]
    mean, variance = mixture_moments(np.full((3, 1), 0.1), np.full((3, 1), 0.7))
    assert mean[0] == 0.1 and variance[0] == 0.7


def test_mixture_rejects_bad_weights():
    with pytest.raises(InvalidInputError):
        mixture_moments([[0.0], [1.0]], [[1.0], [1.0]], weights=[0.7, 0.7])


def test_sample_poses_with_zero_covariance_is_the_mean(rng):
    pose = PoseBelief(1.0, -2.0, 0.5)
    samples = sample_poses(pose, 4, rng)
    assert all(s.x == 1.0 and s.y == -2.0 and s.heading == 0.5 for s in samples)


def _builder(grid):
    def build(sample: PoseBelief) -> SubMap:
        point = np.array([[sample.x, sample.y]])
        return SubMap(point, [1.0], [0.5])
    return build


def test_expected_submap_fuse_single_exact_sample_equals_bcm(grid):
    pose = PoseBelief(1.5, 1.5, 0.0)
    direct = grid.copy()
    bcm_fuse(direct, SubMap([[1.5, 1.5]], [1.0], [0.5]))
    expected_submap_fuse(grid, _builder(grid), pose, n_samples=1, seed=3)
    np.testing.assert_array_equal(grid.mean, direct.mean)
    np.testing.assert_array_equal(grid.variance, direct.variance)
    np.testing.assert_array_equal(grid.observed, direct.observed)


def test_expected_submap_fuse_mixes_touched_cells(grid):
    pose = PoseBelief(2.0, 1.5, 0.0, np.diag([0.3, 0.0, 0.0]))
    expected_submap_fuse(grid, _builder(grid), pose, n_samples=50, seed=1)
    touched = np.flatnonzero(grid.observed)
    assert touched.size >= 2
    # one fused sample gives 0.8; cells missed by some samples are pulled toward the prior
    assert np.all(grid.mean[touched] <= 0.8 + 1e-12)
    assert np.all(grid.mean[touched] > 0.0)
    assert np.all(grid.variance[touched] > 0)


def test_expected_submap_fuse_is_deterministic_per_seed(grid):
    pose = PoseBelief(2.0, 1.5, 0.0, np.diag([0.3, 0.3, 0.0]))
    other = grid.copy()
    expected_submap_fuse(grid, _builder(grid), pose, n_samples=10, seed=9)
    expected_submap_fuse(other, _builder(other), pose, n_samples=10, seed=9)
    np.testing.assert_array_equal(grid.mean, other.mean)


def test_squash_values():
    assert squash_values(0.0, 1.0) == pytest.approx(0.5)
    assert squash_values(3.0, 0.0) > squash_values(3.0, 8.0) > 0.5
    assert squash_values(0.0, 1.0, kind="logistic") == pytest.approx(0.5)
    assert squash_values(-100.0, 0.0) == pytest.approx(1e-15)
    with pytest.raises(InvalidInputError):
        squash_values(0.0, 1.0, kind="tanh")


def test_reference_grid_validation_and_probability(grid):
    ref = ReferenceGrid((0.0, 0.0), 1.0, 4, 3, [OCCUPIED, FREE, UNKNOWN] * 4)
    assert ref.aligned_with(grid)
    assert ref.known.sum() == 8
    np.testing.assert_array_equal(ref.probability()[:3], [1.0, 0.0, 0.5])
    with pytest.raises(InvalidInputError):
        ReferenceGrid((0.0, 0.0), 1.0, 4, 3, [2] * 12)
    with pytest.raises(InvalidInputError):
        ReferenceGrid((0.0, 0.0), 1.0, 4, 3, [0] * 5)


def test_cells_in_box(grid):
    cells = grid.cells_in_box(0.0, 0.0, 1.6, 1.0)
    np.testing.assert_array_equal(np.sort(cells), [0, 1])
    assert grid.cells_in_box(10, 10, 11, 11).size == 0
