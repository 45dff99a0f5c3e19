"""
kd-tree storage for map points
"""
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.models.base import as_points
from src.models.errors import InvalidInputError, InvalidStateError


class SpatialIndex:
    """Balanced kd-tree over a fixed set of 2-D points"""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        self.points = pts.reshape(0, 2) if pts.size == 0 else as_points(pts, "indexed points")
        self._tree = cKDTree(self.points, balanced_tree=True) if len(self) else None

    def __len__(self) -> int:
        return self.points.shape[0]

    def nearest(self, q, k: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Exact k nearest stored points by Euclidean distance

        Returns:
            (points (k, 2), distances (k,), indices (k,)) ordered by distance
        """
        if self._tree is None:
            raise InvalidStateError("spatial index is empty")
        if k < 1 or k > len(self):
            raise InvalidInputError(f"k must be in [1, {len(self)}], got {k}")
        query = as_points(q, "query")[0]
        distances, indices = self._tree.query(query, k=k)
        distances = np.atleast_1d(distances)
        indices = np.atleast_1d(indices)
        return self.points[indices], distances, indices

    def nearest_many(self, queries) -> Tuple[np.ndarray, np.ndarray]:
        """Nearest stored point for each query: (distances, indices)"""
        if self._tree is None:
            raise InvalidStateError("spatial index is empty")
        queries = as_points(queries, "queries")
        distances, indices = self._tree.query(queries, k=1)
        return distances, indices
