"""
Line-oriented simulator log

    # gpom-simlog 1
    WORLD <name>
    SCANCONFIG <n_beams> <max_range> <field_of_view>
    STEP <idx> <x> <y> <heading> <c11> <c12> <c13> <c22> <c23> <c33> <true_x> <true_y> <true_heading> <n> <r1> ... <rn>

Belief means and covariance upper triangles are written with repr() so a
log read back reproduces the trajectory bit for bit. Beam angles are not
stored; they follow from SCANCONFIG.
"""
from pathlib import Path
from typing import List, Union

import numpy as np

from src.models.errors import DatasetReadError, EmptyDatasetError
from src.models.robot import PoseBelief, Scan, ScanConfig
from src.simulation.scenario import Trajectory

PathLike = Union[str, Path]

LOG_VERSION = 1
HEADER = f"# gpom-simlog {LOG_VERSION}"

_UPPER = np.triu_indices(3)


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def format_step(index: int, belief: PoseBelief, truth: PoseBelief, scan: Scan) -> str:
    cov = belief.covariance[_UPPER]
    return " ".join([
        "STEP", str(index),
        _fmt(belief.mean), _fmt(cov), _fmt(truth.mean),
        str(len(scan)), _fmt(scan.ranges),
    ])


def write_log(trajectory: Trajectory, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cfg = trajectory.scan_config
    lines: List[str] = [
        HEADER,
        f"WORLD {trajectory.world_name}",
        f"SCANCONFIG {cfg.n_beams} {cfg.max_range!r} {cfg.field_of_view!r}",
    ]
    for i, (belief, truth, scan) in enumerate(zip(trajectory.beliefs, trajectory.true_poses, trajectory.scans)):
        lines.append(format_step(i, belief, truth, scan))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def _covariance(upper: List[float]) -> np.ndarray:
    cov = np.zeros((3, 3))
    cov[_UPPER] = upper
    return cov + np.triu(cov, 1).T


def read_log(path: PathLike) -> Trajectory:
    """
    Raises:
        DatasetReadError: unreadable file, wrong header or malformed record
        EmptyDatasetError: no STEP records
    """
    try:
        lines = Path(path).read_text(encoding="ascii", errors="replace").splitlines()
    except OSError as e:
        raise DatasetReadError(f"cannot read {path}: {e}") from e
    if not lines or lines[0].strip() != HEADER:
        raise DatasetReadError(f"{path}: not a version {LOG_VERSION} simulator log")

    world_name = ""
    scan_config = None
    trajectory = None
    for number, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        try:
            if tokens[0] == "WORLD":
                world_name = tokens[1]
            elif tokens[0] == "SCANCONFIG":
                scan_config = ScanConfig(
                    n_beams=int(tokens[1]), max_range=float(tokens[2]), field_of_view=float(tokens[3])
                )
            elif tokens[0] == "STEP":
                if scan_config is None:
                    raise DatasetReadError(f"{path}:{number}: STEP before SCANCONFIG")
                if trajectory is None:
                    trajectory = Trajectory(world_name=world_name, scan_config=scan_config)
                values = [float(t) for t in tokens[2:15]]
                n = int(tokens[15])
                ranges = np.array([float(t) for t in tokens[16:]])
                if ranges.size != n or n != scan_config.n_beams:
                    raise DatasetReadError(f"{path}:{number}: expected {scan_config.n_beams} ranges")
                trajectory.beliefs.append(PoseBelief.from_vector(values[0:3], _covariance(values[3:9])))
                trajectory.true_poses.append(PoseBelief.from_vector(values[9:12]))
                trajectory.scans.append(Scan(scan_config.beam_angles(), ranges, scan_config.max_range))
            else:
                raise DatasetReadError(f"{path}:{number}: unknown record '{tokens[0]}'")
        except DatasetReadError:
            raise
        except (ValueError, IndexError) as e:
            raise DatasetReadError(f"{path}:{number}: malformed record ({e})") from e

    if trajectory is None:
        raise EmptyDatasetError(f"{path}: no STEP records")
    return trajectory
