"""
Simulated mapping runs

A run drives the robot along noiseless controls through a named world while
its belief covariance grows by the linearised motion model with no
corrections. Reported means equal the true poses unless `perturb_means` asks
for a draw from each step's propagated covariance.
"""
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.mapping.occupancy import FREE, OCCUPIED, UNKNOWN, ReferenceGrid
from src.mapping.raster import Lattice, flat_index, traverse
from src.models.robot import MotionNoise, PoseBelief, Scan, ScanConfig, World
from src.observability.monitor import get_logger
from src.simulation.motion import Control, propagate
from src.simulation.sensor import raycast

logger = get_logger(__name__)


@dataclass
class Trajectory:
    """True poses, the robot's beliefs about them and the scans taken at each"""
    world_name: str
    scan_config: ScanConfig
    true_poses: List[PoseBelief] = field(default_factory=list)
    beliefs: List[PoseBelief] = field(default_factory=list)
    scans: List[Scan] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.scans)


def simulate(
    world: World,
    controls: Sequence[Control],
    noise: MotionNoise,
    scan_config: ScanConfig,
    seed: int,
    start: PoseBelief,
    perturb_means: bool = False,
) -> Trajectory:
    """One scan at the start pose and one after every control"""
    rng = np.random.default_rng(seed)
    belief = start
    trajectory = Trajectory(world_name=world.name, scan_config=scan_config)

    for step in range(len(controls) + 1):
        if step > 0:
            # noiseless controls: the propagated mean is the true pose
            belief = propagate(belief, controls[step - 1], noise)
        truth = PoseBelief(belief.x, belief.y, belief.heading)

        reported = belief
        if perturb_means:
            draw = rng.multivariate_normal(np.zeros(3), belief.covariance, method="eigh")
            reported = PoseBelief.from_vector(belief.mean + draw, belief.covariance)

        trajectory.true_poses.append(truth)
        trajectory.beliefs.append(reported)
        trajectory.scans.append(raycast(world, truth, scan_config))

    logger.info(
        "trajectory_simulated",
        world=world.name,
        steps=len(trajectory),
        final_trace=float(np.trace(trajectory.beliefs[-1].covariance)),
    )
    return trajectory


def analytic_reference(world: World, lattice: Lattice) -> ReferenceGrid:
    """
    Ground truth from world geometry

    Cells crossed by a wall are occupied, cells whose centre lies in free
    space are free, everything else (obstacle interiors, outside the
    enclosure) is unknown.
    """
    x0, y0 = lattice.origin
    res = lattice.resolution
    xs = x0 + (np.arange(lattice.width) + 0.5) * res
    ys = y0 + (np.arange(lattice.height) + 0.5) * res
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.reshape(-1), gy.reshape(-1)])

    state = np.full(lattice.width * lattice.height, UNKNOWN, dtype=np.int8)
    state[world.in_free_space(centers)] = FREE
    for x_start, y_start, x_end, y_end in world.segments():
        cells = traverse(lattice, (x_start, y_start), (x_end, y_end))
        if cells.size:
            state[flat_index(lattice, cells)] = OCCUPIED

    return ReferenceGrid(lattice.origin, lattice.resolution, lattice.width, lattice.height, state)
