import numpy as np
import pytest

from src.mapping.spatial import SpatialIndex
from src.models.errors import InvalidInputError, InvalidStateError


def test_nearest_matches_linear_scan(rng):
    points = rng.uniform(-10, 10, size=(500, 2))
    index = SpatialIndex(points)
    for query in rng.uniform(-12, 12, size=(50, 2)):
        found, distances, indices = index.nearest(query, k=5)
        brute = np.sort(np.linalg.norm(points - query, axis=1))[:5]
        np.testing.assert_allclose(distances, brute)
        np.testing.assert_array_equal(found, points[indices])


def test_nearest_many(rng):
    points = rng.uniform(0, 1, size=(100, 2))
    queries = rng.uniform(0, 1, size=(30, 2))
    distances, indices = SpatialIndex(points).nearest_many(queries)
    brute = np.linalg.norm(queries[:, None] - points[None], axis=2)
    np.testing.assert_array_equal(indices, brute.argmin(axis=1))
    np.testing.assert_allclose(distances, brute.min(axis=1))


def test_stored_point_is_its_own_nearest():
    index = SpatialIndex([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    _, distances, indices = index.nearest([1.0, 1.0])
    assert indices[0] == 1 and distances[0] == 0.0


def test_empty_index():
    index = SpatialIndex(np.zeros((0, 2)))
    assert len(index) == 0
    with pytest.raises(InvalidStateError):
        index.nearest([0.0, 0.0])
    with pytest.raises(InvalidStateError):
        index.nearest_many([[0.0, 0.0]])


def test_k_out_of_range():
    index = SpatialIndex([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(InvalidInputError):
        index.nearest([0.0, 0.0], k=3)
    with pytest.raises(InvalidInputError):
        index.nearest([0.0, 0.0], k=0)


def test_non_finite_points_are_rejected():
    with pytest.raises(InvalidInputError):
        SpatialIndex([[np.nan, 0.0]])
