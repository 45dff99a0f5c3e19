"""
Named synthetic worlds

    star   outer five-point star wall (tip radius 8 m, notch radius 5 m)
           around a solid five-point star obstacle (tips 3 m, notches 1.5 m),
           bounds [-10, 10]^2
    box    square enclosure [-5, 5]^2, bounds [-6, 6]^2
    empty  no walls, bounds [-10, 10]^2
"""
import math

import numpy as np

from src.models.errors import InvalidInputError
from src.models.robot import World


def star_polygon(outer: float, inner: float, points: int = 5, phase: float = 0.5 * math.pi) -> np.ndarray:
    """Vertices alternating between tip and notch radii, counter-clockwise"""
    angles = phase + np.arange(2 * points) * (math.pi / points)
    radii = np.where(np.arange(2 * points) % 2 == 0, outer, inner)
    return np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def is_simple(polygon: np.ndarray) -> bool:
    """No two non-adjacent edges intersect"""
    n = polygon.shape[0]
    edges = [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def build_world(profile: str) -> World:
    """Deterministic named world"""
    name = profile.lower()
    if name == "star":
        return World(
            name="star",
            polygons=(star_polygon(8.0, 5.0), star_polygon(3.0, 1.5)),
            bounds=(-10.0, -10.0, 10.0, 10.0),
            solid=(False, True),
        )
    if name == "box":
        square = np.array([[-5.0, -5.0], [5.0, -5.0], [5.0, 5.0], [-5.0, 5.0]])
        return World(name="box", polygons=(square,), bounds=(-6.0, -6.0, 6.0, 6.0), solid=(False,))
    if name == "empty":
        return World(name="empty", polygons=(), bounds=(-10.0, -10.0, 10.0, 10.0))
    raise InvalidInputError(f"unknown world profile '{profile}'")
