"""
Simulated rangefinder and labelled training points
"""
import math
from typing import Union

import numpy as np

from src.models.base import TrainingSet
from src.models.errors import InvalidInputError, InvalidPoseError
from src.models.robot import PoseBelief, Scan, ScanConfig, World

OCCUPIED_LABEL = 1.0
FREE_LABEL = -1.0

_PARALLEL_EPS = 1e-12


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def raycast(world: World, pose: Union[PoseBelief, tuple], scan_config: ScanConfig) -> Scan:
    """
    Nearest wall intersection along each beam

    Raises:
        InvalidPoseError: the pose is inside a solid obstacle
    """
    if not isinstance(pose, PoseBelief):
        pose = PoseBelief(x=pose[0], y=pose[1], heading=pose[2])
    origin = np.array([pose.x, pose.y])
    if world.contains_obstacle(origin)[0]:
        raise InvalidPoseError(f"pose ({pose.x:.3f}, {pose.y:.3f}) lies inside an obstacle")

    angles = scan_config.beam_angles()
    max_range = scan_config.max_range
    ranges = np.full(angles.shape[0], max_range)

    segments = world.segments()
    if segments.shape[0]:
        global_angles = pose.heading + angles
        dx, dy = np.cos(global_angles)[:, None], np.sin(global_angles)[:, None]
        px, py = segments[:, 0] - origin[0], segments[:, 1] - origin[1]
        ex, ey = segments[:, 2] - segments[:, 0], segments[:, 3] - segments[:, 1]

        denom = _cross(dx, dy, ex, ey)
        parallel = np.abs(denom) < _PARALLEL_EPS
        safe = np.where(parallel, 1.0, denom)
        t = _cross(px, py, ex, ey) / safe
        s = _cross(px, py, dx, dy) / safe
        valid = ~parallel & (t > 0) & (s >= 0) & (s <= 1)
        hits = np.where(valid, t, np.inf).min(axis=1)
        ranges = np.minimum(hits, max_range)

    return Scan(angles=angles, ranges=ranges, max_range=max_range)


def scan_to_training(scan: Scan, free_spacing: float, noise_variance: float = 0.01) -> TrainingSet:
    """
    Robot-frame labelled points from one scan

    Each hit contributes +1 at the endpoint and -1 points at k * spacing for
    every k >= 1 with k * spacing strictly short of the hit; a miss
    contributes -1 points out to and including max range.
    """
    if not free_spacing > 0:
        raise InvalidInputError("free spacing must be positive")

    points = []
    labels = []
    for angle, rng, hit in zip(scan.angles, scan.ranges, scan.hits):
        direction = np.array([math.cos(angle), math.sin(angle)])
        k = np.arange(1, int(math.floor(rng / free_spacing)) + 2)
        distances = k * free_spacing
        distances = distances[distances < rng] if hit else distances[distances <= scan.max_range]
        if distances.size:
            points.append(distances[:, None] * direction)
            labels.append(np.full(distances.size, FREE_LABEL))
        if hit:
            points.append((rng * direction)[None, :])
            labels.append(np.array([OCCUPIED_LABEL]))

    if not points:
        return TrainingSet(np.zeros((0, 2)), np.zeros(0), noise_variance)
    return TrainingSet(np.vstack(points), np.concatenate(labels), noise_variance)
