"""
Reference grid ray-traced from a trajectory and its scans

Mean poses only. Hit endpoints mark occupied cells, every other cell a beam
crosses is free; a cell that is both ends occupied.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from src.mapping.occupancy import FREE, OCCUPIED, UNKNOWN, ReferenceGrid
from src.mapping.raster import Lattice, cell_of, flat_index, traverse
from src.models.errors import InvalidInputError
from src.models.robot import PoseBelief, Scan
from src.observability.monitor import get_logger

logger = get_logger(__name__)


class GridLattice:
    def __init__(self, origin: Tuple[float, float], resolution: float, width: int, height: int):
        self.origin = (float(origin[0]), float(origin[1]))
        self.resolution = float(resolution)
        self.width = int(width)
        self.height = int(height)


def lattice_around(points: np.ndarray, resolution: float, margin_cells: int = 1) -> GridLattice:
    """Smallest resolution-aligned lattice holding every point plus a margin"""
    if not resolution > 0:
        raise InvalidInputError("resolution must be positive")
    lo = np.floor(points.min(axis=0) / resolution) - margin_cells
    hi = np.floor(points.max(axis=0) / resolution) + 1 + margin_cells
    width, height = (hi - lo).astype(int)
    return GridLattice((lo[0] * resolution, lo[1] * resolution), resolution, width, height)


def reference_map(
    poses: Sequence[PoseBelief],
    scans: Sequence[Scan],
    resolution: Optional[float] = None,
    lattice: Optional[Lattice] = None,
) -> ReferenceGrid:
    """
    Args:
        poses: one pose per scan, already associated
        resolution: used to size a lattice around the data when none is given
    """
    if len(poses) != len(scans):
        raise InvalidInputError(f"{len(poses)} poses for {len(scans)} scans")
    if lattice is None and resolution is None:
        raise InvalidInputError("a resolution or a lattice is required")

    rays = []
    for pose, scan in zip(poses, scans):
        origin = np.array([pose.x, pose.y])
        rays.append((origin, pose.to_global(scan.endpoints()), scan.hits))

    if lattice is None:
        points = np.vstack([np.vstack([o[None, :], ends]) for o, ends, _ in rays])
        lattice = lattice_around(points, resolution)

    n_cells = lattice.width * lattice.height
    free = np.zeros(n_cells, dtype=bool)
    occupied = np.zeros(n_cells, dtype=bool)
    for origin, ends, hits in rays:
        for end, hit in zip(ends, hits):
            cells = traverse(lattice, origin, end)
            if cells.size:
                free[flat_index(lattice, cells)] = True
            if hit:
                ix, iy = cell_of(lattice, end)
                if 0 <= ix < lattice.width and 0 <= iy < lattice.height:
                    occupied[iy * lattice.width + ix] = True

    state = np.full(n_cells, UNKNOWN, dtype=np.int8)
    state[free] = FREE
    state[occupied] = OCCUPIED
    logger.info(
        "reference_built",
        cells=n_cells,
        occupied=int(occupied.sum()),
        free=int((state == FREE).sum()),
    )
    return ReferenceGrid(lattice.origin, lattice.resolution, lattice.width, lattice.height, state)
