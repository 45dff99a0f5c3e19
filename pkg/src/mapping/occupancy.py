"""
Global continuous occupancy map

Each cell carries a Gaussian belief N(mean, variance). Sub-maps predicted by
per-scan GPs are fused with a Bayesian committee machine (precision-weighted
with prior correction). Under pose uncertainty, sub-maps built at sampled
poses are fused one by one into copies of the touched region and the results
reduced to the moments of their equal-weight mixture.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import expit, ndtr

from config.settings import get_settings
from src.mapping.spatial import SpatialIndex
from src.models.base import as_points
from src.models.errors import InvalidInputError
from src.models.robot import PoseBelief
from src.observability.monitor import RunCounters, get_logger


logger = get_logger(__name__)

PROBABILITY_EPS = 1e-15


@dataclass(frozen=True)
class SubMap:
    """One scan's GP predictions at global-frame query points"""
    points: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts = pts.reshape(0, 2) if pts.size == 0 else as_points(pts, "sub-map points")
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        variance = np.asarray(self.variance, dtype=float).reshape(-1)
        if not (pts.shape[0] == mean.shape[0] == variance.shape[0]):
            raise InvalidInputError("sub-map points, means and variances differ in length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(variance))):
            raise InvalidInputError("sub-map values must be finite")
        if np.any(variance <= 0):
            raise InvalidInputError("sub-map variances must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)

    def __len__(self) -> int:
        return self.points.shape[0]


class OccupancyMap:
    """
    Fixed-resolution grid of Gaussian cell beliefs

    Cells are stored row-major (row = y index, row 0 at the map origin);
    unobserved cells hold the prior.
    """

    def __init__(
        self,
        origin: Tuple[float, float],
        resolution: float,
        width: int,
        height: int,
        prior_variance: float,
        prior_mean: float = 0.0,
    ):
        if not (resolution > 0 and math.isfinite(resolution)):
            raise InvalidInputError("resolution must be positive")
        if width < 1 or height < 1:
            raise InvalidInputError("map must have at least one cell")
        if not prior_variance > 0:
            raise InvalidInputError("prior variance must be positive")
        self.origin = (float(origin[0]), float(origin[1]))
        self.resolution = float(resolution)
        self.width = int(width)
        self.height = int(height)
        self.prior_mean = float(prior_mean)
        self.prior_variance = float(prior_variance)
        self.mean = np.full(self.n_cells, self.prior_mean)
        self.variance = np.full(self.n_cells, self.prior_variance)
        self.observed = np.zeros(self.n_cells, dtype=bool)
        self._index: Optional[SpatialIndex] = None

    @classmethod
    def from_bounds(
        cls,
        bounds: Tuple[float, float, float, float],
        resolution: float,
        prior_variance: float,
    ) -> "OccupancyMap":
        xmin, ymin, xmax, ymax = bounds
        width = max(1, int(math.ceil((xmax - xmin) / resolution - 1e-9)))
        height = max(1, int(math.ceil((ymax - ymin) / resolution - 1e-9)))
        return cls((xmin, ymin), resolution, width, height, prior_variance)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, y0, x0 + self.width * self.resolution, y0 + self.height * self.resolution)

    def centers(self) -> np.ndarray:
        """Cell centres, row-major"""
        x0, y0 = self.origin
        xs = x0 + (np.arange(self.width) + 0.5) * self.resolution
        ys = y0 + (np.arange(self.height) + 0.5) * self.resolution
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.reshape(-1), gy.reshape(-1)])

    @property
    def index(self) -> SpatialIndex:
        if self._index is None:
            self._index = SpatialIndex(self.centers())
        return self._index

    def copy(self) -> "OccupancyMap":
        other = OccupancyMap(
            self.origin, self.resolution, self.width, self.height,
            self.prior_variance, self.prior_mean,
        )
        other.mean = self.mean.copy()
        other.variance = self.variance.copy()
        other.observed = self.observed.copy()
        other._index = self._index
        return other

    def inside(self, points: np.ndarray) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.extent
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return (pts[:, 0] >= xmin) & (pts[:, 0] < xmax) & (pts[:, 1] >= ymin) & (pts[:, 1] < ymax)

    def locate(self, points, counters: Optional[RunCounters] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Cell index of each point via the centre kd-tree

        Returns:
            (cell indices of kept points, boolean mask of kept points); points
            outside the map extent are dropped and counted
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        keep = self.inside(pts)
        dropped = int(pts.shape[0] - np.count_nonzero(keep))
        if dropped:
            if counters is not None:
                counters.dropped_points += dropped
            logger.debug("points_dropped", count=dropped)
        if not np.any(keep):
            return np.zeros(0, dtype=int), keep
        _, cells = self.index.nearest_many(pts[keep])
        return np.asarray(cells, dtype=int), keep

    def cells_in_box(self, xmin: float, ymin: float, xmax: float, ymax: float) -> np.ndarray:
        """Indices of cells whose centres lie in the closed box"""
        x0, y0 = self.origin
        res = self.resolution
        ix0 = max(0, int(math.ceil((xmin - x0) / res - 0.5)))
        ix1 = min(self.width - 1, int(math.floor((xmax - x0) / res - 0.5)))
        iy0 = max(0, int(math.ceil((ymin - y0) / res - 0.5)))
        iy1 = min(self.height - 1, int(math.floor((ymax - y0) / res - 0.5)))
        if ix0 > ix1 or iy0 > iy1:
            return np.zeros(0, dtype=int)
        iy, ix = np.meshgrid(np.arange(iy0, iy1 + 1), np.arange(ix0, ix1 + 1), indexing="ij")
        return (iy * self.width + ix).reshape(-1)

    def grid(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-cell vector to (height, width)"""
        return np.asarray(values).reshape(self.height, self.width)


# ============================================================================
# FUSION
# ============================================================================

@dataclass(frozen=True)
class _Fused:
    cells: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    degenerate: int


def _fuse(
    mean: np.ndarray,
    variance: np.ndarray,
    cells: np.ndarray,
    sub_mean: np.ndarray,
    sub_variance: np.ndarray,
    prior_mean: float,
    prior_variance: float,
) -> _Fused:
    """BCM update of the touched cells; pure, returns the new beliefs"""
    unique, inverse = np.unique(cells, return_inverse=True)
    prior_precision = 1.0 / prior_variance
    d_precision = np.zeros(unique.shape[0])
    d_information = np.zeros(unique.shape[0])
    np.add.at(d_precision, inverse, 1.0 / sub_variance - prior_precision)
    np.add.at(d_information, inverse, sub_mean / sub_variance - prior_precision * prior_mean)

    cell_precision = 1.0 / variance[unique]
    precision = cell_precision + d_precision
    information = cell_precision * mean[unique] + d_information

    floor = get_settings().fusion_precision_floor
    bad = ~(precision > 0) | ~np.isfinite(precision)
    degenerate = int(np.count_nonzero(bad))
    if degenerate:
        precision = np.where(bad, prior_precision + floor, precision)
        information = np.where(np.isfinite(information), information, 0.0)

    new_variance = 1.0 / precision
    return _Fused(unique, information * new_variance, new_variance, degenerate)


def _record_degenerate(count: int, counters: Optional[RunCounters]):
    if count:
        logger.warning("degenerate_fusion", cells=count)
        if counters is not None:
            counters.degenerate_fusions += count


def bcm_fuse(
    occupancy: OccupancyMap,
    sub: SubMap,
    counters: Optional[RunCounters] = None,
) -> OccupancyMap:
    """Fuse a sub-map into the map in place; returns the map"""
    cells, keep = occupancy.locate(sub.points, counters)
    if cells.size == 0:
        return occupancy
    fused = _fuse(
        occupancy.mean, occupancy.variance, cells,
        sub.mean[keep], sub.variance[keep],
        occupancy.prior_mean, occupancy.prior_variance,
    )
    _record_degenerate(fused.degenerate, counters)
    occupancy.mean[fused.cells] = fused.mean
    occupancy.variance[fused.cells] = fused.variance
    occupancy.observed[fused.cells] = True
    return occupancy


def mixture_moments(means, variances, weights=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and variance of a Gaussian mixture

    Components run along axis 0; any trailing axes are independent mixtures.
    A single component, or identical components, are returned unchanged.
    """
    mu = np.asarray(means, dtype=float)
    var = np.asarray(variances, dtype=float)
    if mu.shape != var.shape or mu.ndim == 0 or mu.shape[0] == 0:
        raise InvalidInputError("means and variances must share a non-empty leading axis")
    n = mu.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != n or np.any(w < 0) or abs(float(np.sum(w)) - 1.0) > 1e-9:
        raise InvalidInputError("weights must be nonnegative, one per component, and sum to 1")
    if np.any(var <= 0):
        raise InvalidInputError("component variances must be positive")
    if n == 1:
        return mu[0].copy(), var[0].copy()

    w = w.reshape((n,) + (1,) * (mu.ndim - 1))
    mean = np.sum(w * mu, axis=0)
    variance = np.sum(w * (var + np.square(mu - mean)), axis=0)

    identical = np.all(mu == mu[0], axis=0) & np.all(var == var[0], axis=0)
    mean = np.where(identical, mu[0], mean)
    variance = np.where(identical, var[0], variance)
    return mean, variance


def sample_poses(pose: PoseBelief, n_samples: int, rng: np.random.Generator) -> List[PoseBelief]:
    """Draws from N(pose.mean, pose.covariance); zero covariance returns the mean exactly"""
    eigvals, eigvecs = np.linalg.eigh(pose.covariance)
    factor = eigvecs * np.sqrt(np.maximum(eigvals, 0.0))
    z = rng.standard_normal((n_samples, 3))
    draws = pose.mean + z @ factor.T
    return [PoseBelief.from_vector(d) for d in draws]


SubMapBuilder = Callable[[PoseBelief], SubMap]


def expected_submap_fuse(
    occupancy: OccupancyMap,
    build_submap: SubMapBuilder,
    pose: PoseBelief,
    n_samples: int,
    seed: int = 0,
    counters: Optional[RunCounters] = None,
) -> OccupancyMap:
    """
    Fuse the expected sub-map under pose uncertainty, in place

    For each pose sample the local sub-map is placed at the sample and fused
    into the pre-fusion beliefs of the cells it touches; the final belief of
    every touched cell is the equal-weight mixture over samples, where a
    sample that did not touch a cell contributes that cell's pre-fusion belief.
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    samples = sample_poses(pose, n_samples, rng)

    workers = get_settings().worker_threads
    if workers > 1 and n_samples > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            submaps = list(pool.map(build_submap, samples))
    else:
        submaps = [build_submap(s) for s in samples]

    fused_samples: List[_Fused] = []
    for sub in submaps:
        cells, keep = occupancy.locate(sub.points, counters)
        if cells.size == 0:
            fused_samples.append(_Fused(cells, np.zeros(0), np.zeros(0), 0))
            continue
        fused = _fuse(
            occupancy.mean, occupancy.variance, cells,
            sub.mean[keep], sub.variance[keep],
            occupancy.prior_mean, occupancy.prior_variance,
        )
        _record_degenerate(fused.degenerate, counters)
        fused_samples.append(fused)

    union = np.unique(np.concatenate([f.cells for f in fused_samples]))
    if union.size == 0:
        return occupancy

    comp_mean = np.tile(occupancy.mean[union], (n_samples, 1))
    comp_var = np.tile(occupancy.variance[union], (n_samples, 1))
    for j, fused in enumerate(fused_samples):
        if fused.cells.size:
            pos = np.searchsorted(union, fused.cells)
            comp_mean[j, pos] = fused.mean
            comp_var[j, pos] = fused.variance

    mean, variance = mixture_moments(comp_mean, comp_var)
    occupancy.mean[union] = mean
    occupancy.variance[union] = variance
    occupancy.observed[union] = True
    return occupancy


# ============================================================================
# CLASSIFICATION
# ============================================================================

def squash_values(mean, variance, kind: str = "probit") -> np.ndarray:
    """Occupancy probability from Gaussian beliefs"""
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if kind == "probit":
        prob = ndtr(mean / np.sqrt(1.0 + variance))
    elif kind == "logistic":
        prob = expit(mean)
    else:
        raise InvalidInputError(f"unknown squash '{kind}'")
    return np.clip(prob, PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)


def squash(occupancy: OccupancyMap, kind: str = "probit") -> np.ndarray:
    """Per-cell occupancy probability; unobserved cells are 0.5"""
    prob = squash_values(occupancy.mean, occupancy.variance, kind)
    return np.where(occupancy.observed, prob, 0.5)


# ============================================================================
# REFERENCE GRIDS
# ============================================================================

OCCUPIED, FREE, UNKNOWN = 1, 0, -1


@dataclass
class ReferenceGrid:
    """Binary ground-truth grid used as the AUC label source"""
    origin: Tuple[float, float]
    resolution: float
    width: int
    height: int
    state: np.ndarray

    def __post_init__(self):
        state = np.asarray(self.state, dtype=np.int8).reshape(-1)
        if state.shape[0] != self.width * self.height:
            raise InvalidInputError("reference state does not match the grid size")
        if not np.all(np.isin(state, (OCCUPIED, FREE, UNKNOWN))):
            raise InvalidInputError("reference states must be 1, 0 or -1")
        self.state = state

    @classmethod
    def empty_like(cls, occupancy: "OccupancyMap") -> "ReferenceGrid":
        return cls(
            occupancy.origin, occupancy.resolution, occupancy.width, occupancy.height,
            np.full(occupancy.n_cells, UNKNOWN, dtype=np.int8),
        )

    def template(self, prior_variance: float = 1.0) -> OccupancyMap:
        """An empty occupancy map on the same lattice"""
        return OccupancyMap(self.origin, self.resolution, self.width, self.height, prior_variance)

    def aligned_with(self, occupancy: "OccupancyMap") -> bool:
        return (
            self.width == occupancy.width
            and self.height == occupancy.height
            and np.allclose(self.origin, occupancy.origin)
            and math.isclose(self.resolution, occupancy.resolution)
        )

    @property
    def known(self) -> np.ndarray:
        return self.state != UNKNOWN

    def probability(self) -> np.ndarray:
        """1 for occupied, 0 for free, 0.5 for unknown"""
        return np.where(self.state == OCCUPIED, 1.0, np.where(self.state == FREE, 0.0, 0.5))
