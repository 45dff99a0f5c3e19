"""
Unicycle motion model with additive Gaussian noise

    x' = x + v cos(theta) + w_x
    y' = y + v sin(theta) + w_y
    theta' = theta + omega + w_theta,   w ~ N(0, Q)

The covariance is predicted with the Jacobian F of the model at the current
estimate; the noise enters additively so its Jacobian is the identity.
"""
import math
from typing import Optional, Tuple, Union

import numpy as np

from src.models.robot import MotionNoise, PoseBelief

Control = Tuple[float, float]


def motion_jacobian(pose: PoseBelief, control: Control) -> np.ndarray:
    v = float(control[0])
    return np.array([
        [1.0, 0.0, -v * math.sin(pose.heading)],
        [0.0, 1.0, v * math.cos(pose.heading)],
        [0.0, 0.0, 1.0],
    ])


def _rng(seed: Union[None, int, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def propagate(
    pose: PoseBelief,
    control: Control,
    noise: MotionNoise,
    sample_noise: bool = False,
    seed: Optional[Union[int, np.random.Generator]] = None,
) -> PoseBelief:
    """One prediction step: new mean and linearised covariance"""
    v, omega = float(control[0]), float(control[1])
    mean = np.array([
        pose.x + v * math.cos(pose.heading),
        pose.y + v * math.sin(pose.heading),
        pose.heading + omega,
    ])
    if sample_noise:
        std = np.sqrt(np.diag(noise.q))
        mean = mean + std * _rng(seed).standard_normal(3)

    f = motion_jacobian(pose, control)
    cov = f @ pose.covariance @ f.T + noise.q
    cov = 0.5 * (cov + cov.T)
    return PoseBelief.from_vector(mean, cov)


def star_loop_controls(radius: float = 4.0, n_poses: int = 40) -> Tuple[PoseBelief, list]:
    """
    Start pose and controls tracing a closed polygonal loop of n_poses
    vertices on a circle about the origin

    Returns:
        (start pose at (radius, 0), list of n_poses - 1 (v, omega) controls)
    """
    turn = 2.0 * math.pi / n_poses
    chord = 2.0 * radius * math.sin(0.5 * turn)
    start = PoseBelief(x=radius, y=0.0, heading=0.5 * math.pi + 0.5 * turn)
    return start, [(chord, turn)] * (n_poses - 1)
