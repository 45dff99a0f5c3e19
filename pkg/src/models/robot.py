"""
Robot and Sensor Models
Pose beliefs, motion noise profiles, worlds, scans and dataset records
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.models.errors import InvalidInputError


POSE_DIM = 3


def wrap_angle(theta):
    """Wrap heading(s) into (-pi, pi]"""
    return math.pi - np.mod(math.pi - np.asarray(theta, dtype=float), 2.0 * math.pi)


@dataclass(frozen=True)
class PoseBelief:
    """Robot pose (x, y, heading) with a 3x3 covariance"""
    x: float
    y: float
    heading: float
    covariance: np.ndarray = field(default_factory=lambda: np.zeros((POSE_DIM, POSE_DIM)))

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading)):
            raise InvalidInputError("pose components must be finite")
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (POSE_DIM, POSE_DIM) or not np.all(np.isfinite(cov)):
            raise InvalidInputError("pose covariance must be a finite 3x3 matrix")
        cov = 0.5 * (cov + cov.T)
        if np.min(np.linalg.eigvalsh(cov)) < -1e-10 * max(1.0, float(np.max(np.abs(cov)))):
            raise InvalidInputError("pose covariance is not positive semi-definite")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        heading = float(self.heading)
        if not -math.pi < heading <= math.pi:
            heading = float(wrap_angle(heading))
        object.__setattr__(self, "heading", heading)
        object.__setattr__(self, "covariance", cov)

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading])

    @classmethod
    def from_vector(cls, mean, covariance=None) -> "PoseBelief":
        mean = np.asarray(mean, dtype=float)
        cov = np.zeros((POSE_DIM, POSE_DIM)) if covariance is None else covariance
        return cls(x=mean[0], y=mean[1], heading=mean[2], covariance=cov)

    def with_covariance(self, covariance) -> "PoseBelief":
        return PoseBelief(self.x, self.y, self.heading, covariance)

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return np.array([[c, -s], [s, c]])

    def to_global(self, local_points: np.ndarray) -> np.ndarray:
        """Rigid-body transform of robot-frame points into the world frame"""
        return np.asarray(local_points, dtype=float) @ self.rotation().T + np.array([self.x, self.y])

    def to_local(self, global_points: np.ndarray) -> np.ndarray:
        return (np.asarray(global_points, dtype=float) - np.array([self.x, self.y])) @ self.rotation()


# Per-step odometry noise levels (std devs: m, m, rad)
NOISE_PROFILES: Dict[str, Tuple[float, float, float]] = {
    "Q1": (0.05, 0.05, 0.25),
    "Q2": (0.1, 0.1, 0.5),
    "Q3": (0.15, 0.15, 0.75),
    "Q4": (0.2, 0.2, 1.0),
    "Q5": (0.3, 0.3, 2.0),
}


@dataclass(frozen=True)
class MotionNoise:
    """Diagonal additive motion-noise covariance Q"""
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape == (POSE_DIM,):
            q = np.diag(q)
        if q.shape != (POSE_DIM, POSE_DIM):
            raise InvalidInputError("motion noise must be 3x3")
        if np.any(np.diag(q) < 0) or np.any(q - np.diag(np.diag(q)) != 0):
            raise InvalidInputError("motion noise must be diagonal with nonnegative entries")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_profile(cls, name: str) -> "MotionNoise":
        try:
            std = NOISE_PROFILES[name.upper()]
        except KeyError:
            raise InvalidInputError(
                f"unknown noise profile '{name}', expected one of {sorted(NOISE_PROFILES)}"
            ) from None
        return cls(np.diag(np.square(std)))

    @classmethod
    def zero(cls) -> "MotionNoise":
        return cls(np.zeros((POSE_DIM, POSE_DIM)))


class ScanConfig(BaseModel):
    """Simulated rangefinder geometry"""
    model_config = ConfigDict(frozen=True)

    n_beams: int = Field(72, ge=1)
    max_range: float = Field(10.0, gt=0, allow_inf_nan=False)
    field_of_view: float = Field(2.0 * math.pi, gt=0, le=2.0 * math.pi)

    def beam_angles(self) -> np.ndarray:
        if self.field_of_view >= 2.0 * math.pi - 1e-12:
            return np.arange(self.n_beams) * (2.0 * math.pi / self.n_beams)
        if self.n_beams == 1:
            return np.zeros(1)
        return np.linspace(-0.5 * self.field_of_view, 0.5 * self.field_of_view, self.n_beams)


@dataclass(frozen=True)
class Scan:
    """One rangefinder sweep in the robot frame"""
    angles: np.ndarray
    ranges: np.ndarray
    max_range: float
    hits: Optional[np.ndarray] = None

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        ranges = np.asarray(self.ranges, dtype=float).reshape(-1)
        if angles.shape != ranges.shape:
            raise InvalidInputError(f"{angles.size} beam angles but {ranges.size} ranges")
        if not (np.all(np.isfinite(angles)) and np.all(np.isfinite(ranges))):
            raise InvalidInputError("scan contains non-finite values")
        if self.max_range <= 0:
            raise InvalidInputError("max range must be positive")
        if np.any(ranges <= 0):
            raise InvalidInputError("ranges must be strictly positive")
        ranges = np.minimum(ranges, self.max_range)
        hits = ranges < self.max_range if self.hits is None else np.asarray(self.hits, dtype=bool)
        if np.any(hits != (ranges < self.max_range)):
            raise InvalidInputError("hit flags must be false exactly at max range")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "max_range", float(self.max_range))
        object.__setattr__(self, "hits", hits)

    def __len__(self) -> int:
        return self.ranges.shape[0]

    def decimate(self, stride: int) -> "Scan":
        """Keep every stride-th beam"""
        if stride < 1:
            raise InvalidInputError("beam stride must be at least 1")
        return Scan(self.angles[::stride], self.ranges[::stride], self.max_range)

    def endpoints(self) -> np.ndarray:
        return np.column_stack([self.ranges * np.cos(self.angles), self.ranges * np.sin(self.angles)])


@dataclass(frozen=True)
class World:
    """
    Closed polylines inside an axis-aligned rectangle

    A solid polygon is an obstacle; a non-solid polygon is an enclosing wall
    whose interior is the navigable area.
    """
    name: str
    polygons: Tuple[np.ndarray, ...]
    bounds: Tuple[float, float, float, float]
    solid: Tuple[bool, ...] = ()

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise InvalidInputError("world bounds are empty")
        polys = []
        for poly in self.polygons:
            poly = np.asarray(poly, dtype=float)
            if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
                raise InvalidInputError("polygons need at least 3 vertices")
            polys.append(poly)
        solid = tuple(self.solid) if self.solid else (True,) * len(polys)
        if len(solid) != len(polys):
            raise InvalidInputError("one solid flag per polygon is required")
        object.__setattr__(self, "polygons", tuple(polys))
        object.__setattr__(self, "solid", tuple(bool(s) for s in solid))

    def segments(self) -> np.ndarray:
        """All polygon edges as an (m, 4) array of x0, y0, x1, y1"""
        if not self.polygons:
            return np.zeros((0, 4))
        return np.vstack([
            np.hstack([poly, np.roll(poly, -1, axis=0)]) for poly in self.polygons
        ])

    def contains_obstacle(self, points: np.ndarray) -> np.ndarray:
        """True where a point lies inside a solid polygon"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(pts.shape[0], dtype=bool)
        for poly, solid in zip(self.polygons, self.solid):
            if solid:
                inside |= _point_in_polygon(pts, poly)
        return inside

    def in_free_space(self, points: np.ndarray) -> np.ndarray:
        """Inside the bounds and every enclosure, outside every obstacle"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xmin, ymin, xmax, ymax = self.bounds
        free = (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax) & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
        for poly, solid in zip(self.polygons, self.solid):
            if not solid:
                free &= _point_in_polygon(pts, poly)
        return free & ~self.contains_obstacle(pts)


def _point_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x, y = points[:, 0:1], points[:, 1:2]
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    crossings = straddle & (x < x_cross)
    return (np.count_nonzero(crossings, axis=1) % 2) == 1


@dataclass(frozen=True)
class DatasetRecord:
    """A laser record from a log, with the poses reported alongside it"""
    kind: str
    ranges: np.ndarray
    angles: np.ndarray
    laser_pose: Tuple[float, float, float]
    odometry: Tuple[float, float, float]
    timestamp: float
    hostname: str
    logger_timestamp: float
    line_number: int
    max_range: float

    def to_scan(self, stride: int = 1) -> Scan:
        """Readings of zero or beyond max range become misses"""
        ranges = np.where(
            (self.ranges <= 0) | (self.ranges >= self.max_range), self.max_range, self.ranges
        )
        return Scan(self.angles, ranges, self.max_range).decimate(stride)


@dataclass
class PoseTrack:
    """Externally estimated trajectory with per-pose covariance"""
    ids: List[int]
    poses: List[PoseBelief]
    timestamps: Optional[List[float]] = None

    def __len__(self) -> int:
        return len(self.poses)
