"""
Incremental map building for one method

Each step turns one scan into robot-frame labelled points, fits a (warped)
GP and fuses its predictions at nearby cell centres into the global map:

    none  sub-map placed at the mean pose, BCM fusion
    ek    training points pushed to the world frame by the unscented
          transform, expected-kernel GP, BCM fusion
    esm   deterministic robot-frame GP, sub-maps placed at pose samples,
          mixture of the fused results

Hyperparameters are learned on the first non-empty scan and kept for the rest of the
run. Cells carry latent Gaussian beliefs; warped methods store the
observation-space mean with the latent variance.
"""
from typing import Optional

import numpy as np

from config.experiment import MethodConfig, TrainingConfig
from src.gp.optimize import optimize_hyperparameters
from src.gp.regression import GpModel, fit, predict
from src.gp.uncertain import fit_expected, unscented_transform
from src.gp.warping import expected_inverse_warp, warp
from src.mapping.raster import Lattice
from src.mapping.occupancy import OccupancyMap, SubMap, bcm_fuse, expected_submap_fuse
from src.mapping.spatial import SpatialIndex
from src.models.base import KernelSpec, TrainingSet, WarpFamily, WarpSpec
from src.models.robot import PoseBelief, Scan
from src.observability.monitor import RunCounters, get_logger
from src.simulation.sensor import scan_to_training

logger = get_logger(__name__)


def step_seed(seed: int, step: int) -> int:
    """Independent per-step seed, stable across runs and threads"""
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


class IncrementalMapper:
    """Owns one method's map; steps must be applied in order"""

    def __init__(
        self,
        method: MethodConfig,
        training: TrainingConfig,
        lattice: Lattice,
        query_margin: float,
        seed: int,
        counters: Optional[RunCounters] = None,
    ):
        self.method = method
        self.training = training
        self.lattice = lattice
        self.query_margin = query_margin
        self.seed = seed
        self.counters = counters if counters is not None else RunCounters()
        self.kernel: KernelSpec = method.kernel.to_spec()
        self.warp: WarpSpec = method.warp.to_spec()
        self.map: Optional[OccupancyMap] = None
        self.steps = 0
        self.logger = logger.bind(method=method.name)

    @property
    def warped(self) -> bool:
        return self.warp.family != WarpFamily.IDENTITY

    def _ensure_map(self):
        if self.map is None:
            self.map = OccupancyMap(
                self.lattice.origin,
                self.lattice.resolution,
                self.lattice.width,
                self.lattice.height,
                prior_variance=self.kernel.signal_variance + self.training.noise_variance,
            )

    def result(self) -> OccupancyMap:
        """The map so far, or an all-prior map when nothing was fused"""
        self._ensure_map()
        return self.map

    def _learn(self, train: TrainingSet):
        if not self.training.optimize:
            return
        kernel, warp_spec, value = optimize_hyperparameters(
            train,
            self.kernel,
            self.warp if self.warped else None,
            budget=self.training.optimizer_budget,
        )
        self.kernel = kernel
        if warp_spec is not None:
            self.warp = warp_spec
        self.logger.info(
            "hyperparameters_learned",
            signal_variance=kernel.signal_variance,
            length_scales=list(kernel.length_scales),
            nlml=value,
        )

    def _targets(self, train: TrainingSet) -> Optional[np.ndarray]:
        return warp(self.warp, train.labels) if self.warped else None

    def _query_cells(self, global_points: np.ndarray) -> np.ndarray:
        """Cells within the query margin of any training point"""
        margin = self.query_margin
        lo = global_points.min(axis=0) - margin
        hi = global_points.max(axis=0) + margin
        cells = self.map.cells_in_box(lo[0], lo[1], hi[0], hi[1])
        if cells.size == 0:
            return cells
        distances, _ = SpatialIndex(global_points).nearest_many(self.map.centers()[cells])
        return cells[distances <= margin]

    def _predict_cells(self, model: GpModel, queries: np.ndarray):
        latent_mean, latent_var = predict(model, queries)
        mean = expected_inverse_warp(self.warp, latent_mean, latent_var) if self.warped else latent_mean
        return mean, latent_var + model.train.noise_variance

    def _local_submap(self, model: GpModel, local_points: np.ndarray, pose: PoseBelief) -> SubMap:
        cells = self._query_cells(pose.to_global(local_points))
        centers = self.map.centers()[cells]
        if centers.shape[0] == 0:
            return SubMap(np.zeros((0, 2)), np.zeros(0), np.zeros(0))
        mean, variance = self._predict_cells(model, pose.to_local(centers))
        return SubMap(centers, mean, variance)

    def step(self, pose: PoseBelief, scan: Scan) -> Optional[OccupancyMap]:
        """Fuse one scan taken at the believed pose; no map exists before the first non-empty scan"""
        train = scan_to_training(
            scan.decimate(self.training.beam_stride),
            self.training.free_spacing,
            self.training.noise_variance,
        )
        index = self.steps
        self.steps += 1
        if len(train) == 0:
            self.logger.debug("scan_empty", step=index)
            return self.map
        if self.map is None:
            self._learn(train)
            self._ensure_map()

        kind = self.method.uncertainty.kind
        if kind == "ek":
            self._step_expected_kernel(train, pose, index)
        else:
            model = fit(train, self.kernel, targets=self._targets(train))
            if kind == "esm":
                expected_submap_fuse(
                    self.map,
                    lambda sample: self._local_submap(model, train.inputs, sample),
                    pose,
                    self.method.uncertainty.n_samples,
                    seed=step_seed(self._seed(), index),
                    counters=self.counters,
                )
            else:
                bcm_fuse(self.map, self._local_submap(model, train.inputs, pose), self.counters)

        self.logger.debug("scan_fused", step=index, points=len(train))
        return self.map

    def _seed(self) -> int:
        own = self.method.uncertainty.seed
        return self.seed if own is None else own

    def _step_expected_kernel(self, train: TrainingSet, pose: PoseBelief, index: int):
        means, covs = unscented_transform(train.inputs, pose)
        global_train = TrainingSet(means, train.labels, train.noise_variance, input_covariances=covs)
        expectation = self.method.uncertainty.expectation(step_seed(self._seed(), index))
        model = fit_expected(
            global_train, self.kernel, expectation,
            targets=self._targets(global_train), counters=self.counters,
        )
        cells = self._query_cells(means)
        if cells.size == 0:
            return
        centers = self.map.centers()[cells]
        mean, variance = self._predict_cells(model, centers)
        bcm_fuse(self.map, SubMap(centers, mean, variance), self.counters)
