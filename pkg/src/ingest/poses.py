"""
Pose tracks from external pose-graph solutions

    id x y theta c11 c12 c13 c22 c23 c33 [timestamp]

The covariance is rebuilt from its upper triangle. Matrices that are not
PSD are clipped to a small positive eigenvalue floor, logged and counted.
"""
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.models.errors import DatasetReadError, EmptyDatasetError, InvalidInputError
from src.models.robot import DatasetRecord, PoseBelief, PoseTrack
from src.observability.monitor import RunCounters, get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

EIGEN_FLOOR = 1e-12
_UPPER = np.triu_indices(3)


def covariance_from_upper(upper: Sequence[float]) -> np.ndarray:
    cov = np.zeros((3, 3))
    cov[_UPPER] = upper
    return cov + np.triu(cov, 1).T


def clip_covariance(cov: np.ndarray, floor: float = EIGEN_FLOOR) -> Tuple[np.ndarray, bool]:
    """Symmetrise and raise eigenvalues below zero to `floor`"""
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.min() >= 0:
        return cov, False
    clipped = (eigvecs * np.maximum(eigvals, floor)) @ eigvecs.T
    return 0.5 * (clipped + clipped.T), True


def load_pose_track(path: PathLike, counters: Optional[RunCounters] = None) -> PoseTrack:
    """
    Raises:
        DatasetReadError: unreadable file or malformed line
        EmptyDatasetError: no poses
    """
    try:
        lines = Path(path).read_text(encoding="utf-8", errors="replace").splitlines()
    except OSError as e:
        raise DatasetReadError(f"cannot read {path}: {e}") from e

    ids: List[int] = []
    poses: List[PoseBelief] = []
    timestamps: List[float] = []
    clips = 0
    for number, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) not in (10, 11):
            raise DatasetReadError(f"{path}:{number}: expected 10 or 11 fields, got {len(tokens)}")
        try:
            pose_id = int(tokens[0])
            values = [float(t) for t in tokens[1:]]
            cov, clipped = clip_covariance(covariance_from_upper(values[3:9]))
            pose = PoseBelief.from_vector(values[0:3], cov)
        except (ValueError, np.linalg.LinAlgError) as e:
            raise DatasetReadError(f"{path}:{number}: {e}") from e
        if clipped:
            clips += 1
            logger.warning("pose_covariance_clipped", source=str(path), line=number, pose_id=pose_id)
        ids.append(pose_id)
        poses.append(pose)
        if len(values) == 10:
            timestamps.append(values[9])

    if not poses:
        raise EmptyDatasetError(f"{path}: no poses")
    if counters is not None:
        counters.pose_covariance_clips += clips
    has_times = len(timestamps) == len(poses)
    return PoseTrack(ids=ids, poses=poses, timestamps=timestamps if has_times else None)


def write_pose_track(track: PoseTrack, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, (pose_id, pose) in enumerate(zip(track.ids, track.poses)):
        values = [*pose.mean, *pose.covariance[_UPPER]]
        if track.timestamps is not None:
            values.append(track.timestamps[i])
        lines.append(" ".join([str(pose_id), *(repr(float(v)) for v in values)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def associate(track: PoseTrack, records: Sequence[DatasetRecord], mode: str = "timestamp") -> List[int]:
    """
    Pose index for every laser record

    `timestamp` picks the pose with the nearest timestamp and falls back to
    `index` when the track carries none; `index` pairs pose i with record i
    and needs equal lengths.
    """
    if mode == "timestamp" and track.timestamps is None:
        logger.info("association_fallback", reason="pose track has no timestamps")
        mode = "index"

    if mode == "index":
        if len(track) != len(records):
            raise InvalidInputError(f"{len(track)} poses cannot be paired with {len(records)} scans by index")
        return list(range(len(records)))
    if mode != "timestamp":
        raise InvalidInputError(f"unknown association mode '{mode}'")

    times = np.asarray(track.timestamps, dtype=float)
    order = np.argsort(times, kind="mergesort")
    sorted_times = times[order]
    matches = []
    for record in records:
        pos = int(np.searchsorted(sorted_times, record.timestamp))
        candidates = [c for c in (pos - 1, pos) if 0 <= c < sorted_times.size]
        best = min(candidates, key=lambda c: (abs(sorted_times[c] - record.timestamp), c))
        matches.append(int(order[best]))
    return matches
