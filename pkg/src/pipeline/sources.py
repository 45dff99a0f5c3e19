"""
Mapping inputs from a simulated world or a recorded dataset
"""
from dataclasses import dataclass, field
from typing import List, Optional

from config.experiment import DatasetSource, ExperimentConfig, SimulationSource
from src.ingest.carmen import parse_log
from src.ingest.poses import associate, load_pose_track
from src.ingest.reference import reference_map
from src.mapping.occupancy import OccupancyMap, ReferenceGrid
from src.models.robot import MotionNoise, PoseBelief, Scan
from src.observability.monitor import RunCounters, get_logger
from src.simulation.logfile import read_log
from src.simulation.motion import star_loop_controls
from src.simulation.scenario import Trajectory, analytic_reference, simulate
from src.simulation.world import build_world

logger = get_logger(__name__)

DATASET_PROFILE = "dataset"


@dataclass
class MappingInput:
    """Believed poses, their scans and the grid they are scored on"""
    profile: str
    beliefs: List[PoseBelief]
    scans: List[Scan]
    reference: ReferenceGrid
    counters: RunCounters = field(default_factory=RunCounters)
    trajectory: Optional[Trajectory] = None

    def __len__(self) -> int:
        return len(self.scans)


def simulate_source(source: SimulationSource, seed: int) -> Trajectory:
    world = build_world(source.world)
    start, controls = star_loop_controls(source.loop_radius, source.n_poses)
    return simulate(
        world,
        controls,
        MotionNoise.from_profile(source.noise_profile),
        source.scan,
        seed,
        start,
        perturb_means=source.perturb_means,
    )


def _simulation_input(config: ExperimentConfig) -> MappingInput:
    source = config.simulation
    world = build_world(source.world)
    if source.log is not None:
        trajectory = read_log(source.log)
    else:
        trajectory = simulate_source(source, config.seed)
    lattice = OccupancyMap.from_bounds(world.bounds, config.map.resolution, prior_variance=1.0)
    return MappingInput(
        profile=source.noise_profile,
        beliefs=list(trajectory.beliefs),
        scans=list(trajectory.scans),
        reference=analytic_reference(world, lattice),
        trajectory=trajectory,
    )


def _dataset_input(config: ExperimentConfig) -> MappingInput:
    source: DatasetSource = config.dataset
    counters = RunCounters()
    parsed = parse_log(source.log, max_range=source.max_range, counters=counters)
    records = parsed.lasers("FLASER") or parsed.records
    if source.max_scans is not None:
        records = records[:source.max_scans]
    track = load_pose_track(source.pose_track, counters=counters)
    matches = associate(track, records, source.association)

    beliefs = [track.poses[i] for i in matches]
    scans = [r.to_scan() for r in records]
    reference = reference_map(beliefs, scans, resolution=config.map.resolution)
    logger.info("dataset_loaded", scans=len(scans), poses=len(track))
    return MappingInput(
        profile=DATASET_PROFILE,
        beliefs=beliefs,
        scans=scans,
        reference=reference,
        counters=counters,
    )


def prepare_input(config: ExperimentConfig) -> MappingInput:
    if config.simulation is not None:
        return _simulation_input(config)
    return _dataset_input(config)
