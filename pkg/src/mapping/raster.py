"""
Exact grid traversal of line segments (Amanatides-Woo)
"""
import math
from typing import List, Protocol, Tuple

import numpy as np


class Lattice(Protocol):
    origin: Tuple[float, float]
    resolution: float
    width: int
    height: int


def traverse(lattice: Lattice, start, end) -> np.ndarray:
    """
    Cells crossed by the segment start -> end, in order of traversal

    Returns:
        (k, 2) integer array of (ix, iy) inside the lattice; the last row is
        the cell holding `end` when that cell is inside the lattice
    """
    res = lattice.resolution
    x0 = (float(start[0]) - lattice.origin[0]) / res
    y0 = (float(start[1]) - lattice.origin[1]) / res
    x1 = (float(end[0]) - lattice.origin[0]) / res
    y1 = (float(end[1]) - lattice.origin[1]) / res

    ix, iy = math.floor(x0), math.floor(y0)
    end_ix, end_iy = math.floor(x1), math.floor(y1)
    dx, dy = x1 - x0, y1 - y0

    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    t_delta_x = abs(1.0 / dx) if dx != 0 else math.inf
    t_delta_y = abs(1.0 / dy) if dy != 0 else math.inf
    t_max_x = ((ix + (step_x > 0)) - x0) / dx if dx != 0 else math.inf
    t_max_y = ((iy + (step_y > 0)) - y0) / dy if dy != 0 else math.inf

    cells: List[Tuple[int, int]] = [(ix, iy)]
    for _ in range(abs(end_ix - ix) + abs(end_iy - iy)):
        if t_max_x < t_max_y:
            ix += step_x
            t_max_x += t_delta_x
        else:
            iy += step_y
            t_max_y += t_delta_y
        cells.append((ix, iy))

    out = np.asarray(cells, dtype=int).reshape(-1, 2)
    inside = (out[:, 0] >= 0) & (out[:, 0] < lattice.width) & (out[:, 1] >= 0) & (out[:, 1] < lattice.height)
    return out[inside]


def flat_index(lattice: Lattice, cells: np.ndarray) -> np.ndarray:
    """Row-major cell index of (ix, iy) pairs"""
    cells = np.asarray(cells, dtype=int).reshape(-1, 2)
    return cells[:, 1] * lattice.width + cells[:, 0]


def cell_of(lattice: Lattice, point) -> Tuple[int, int]:
    return (
        math.floor((float(point[0]) - lattice.origin[0]) / lattice.resolution),
        math.floor((float(point[1]) - lattice.origin[1]) / lattice.resolution),
    )
