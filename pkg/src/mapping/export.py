"""
Map export and re-import

PGM: binary P5, 8-bit, value = round(255 * (1 - p)) so occupied cells are
dark; the first image row is the top of the map (largest y).
CSV: one row per cell with a header line; map rows carry an observed flag
(unobserved cells hold the prior), reference grids carry the state
(1 occupied, 0 free, -1 unknown).
"""
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd

from src.mapping.occupancy import OccupancyMap, ReferenceGrid, squash
from src.models.errors import DatasetReadError

PathLike = Union[str, Path]

MAP_COLUMNS = ["x", "y", "mean", "variance", "probability", "observed"]
REFERENCE_COLUMNS = ["x", "y", "state", "probability"]


def probability_to_gray(probability: np.ndarray) -> np.ndarray:
    return np.rint(255.0 * (1.0 - np.clip(probability, 0.0, 1.0))).astype(np.uint8)


def write_pgm(path: PathLike, probability: np.ndarray, width: int, height: int) -> Path:
    """Write per-cell probabilities (row-major, row 0 at min y) as a P5 image"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = probability_to_gray(np.asarray(probability).reshape(height, width))[::-1]
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    path.write_bytes(header + image.tobytes())
    return path


def read_pgm(path: PathLike) -> Tuple[np.ndarray, int, int]:
    """
    Read a P5 image written by write_pgm

    Returns:
        (probabilities row-major with row 0 at min y, width, height)
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DatasetReadError(f"cannot read {path}: {e}") from e
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetReadError(f"{path}: truncated PGM header")
        fields.append(data[start:pos])
    pos += 1
    if fields[0] != b"P5" or int(fields[3]) != 255:
        raise DatasetReadError(f"{path}: only 8-bit P5 images are supported")
    width, height = int(fields[1]), int(fields[2])
    pixels = np.frombuffer(data[pos:pos + width * height], dtype=np.uint8)
    if pixels.size != width * height:
        raise DatasetReadError(f"{path}: truncated PGM data")
    probability = 1.0 - pixels.reshape(height, width)[::-1].astype(float) / 255.0
    return probability.reshape(-1), width, height


def map_frame(occupancy: OccupancyMap, squash_kind: str = "probit") -> pd.DataFrame:
    centers = occupancy.centers()
    return pd.DataFrame({
        "x": centers[:, 0],
        "y": centers[:, 1],
        "mean": occupancy.mean,
        "variance": occupancy.variance,
        "probability": squash(occupancy, squash_kind),
        "observed": occupancy.observed.astype(int),
    }, columns=MAP_COLUMNS)


def write_map(occupancy: OccupancyMap, directory: PathLike, stem: str, squash_kind: str = "probit") -> Tuple[Path, Path]:
    """Write <stem>.csv and <stem>.pgm"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frame = map_frame(occupancy, squash_kind)
    csv_path = directory / f"{stem}.csv"
    frame.to_csv(csv_path, index=False)
    pgm_path = write_pgm(directory / f"{stem}.pgm", frame["probability"].to_numpy(), occupancy.width, occupancy.height)
    return csv_path, pgm_path


def _lattice(frame: pd.DataFrame) -> Tuple[Tuple[float, float], float, int, int]:
    xs = np.unique(frame["x"].to_numpy())
    ys = np.unique(frame["y"].to_numpy())
    if xs.size == 0 or ys.size == 0:
        raise DatasetReadError("map CSV contains no cells")
    if xs.size > 1:
        resolution = float(np.min(np.diff(xs)))
    elif ys.size > 1:
        resolution = float(np.min(np.diff(ys)))
    else:
        resolution = 1.0
    width, height = xs.size, ys.size
    if width * height != len(frame):
        raise DatasetReadError("map CSV is not a complete grid")
    origin = (float(xs[0]) - 0.5 * resolution, float(ys[0]) - 0.5 * resolution)
    return origin, resolution, width, height


def _read_frame(path: PathLike, columns) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetReadError(f"cannot read {path}: {e}") from e
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DatasetReadError(f"{path}: missing columns {missing}")
    return frame.sort_values(["y", "x"], kind="mergesort").reset_index(drop=True)


def read_map(path: PathLike, prior_variance: float = 1.0) -> Tuple[OccupancyMap, np.ndarray]:
    """
    Rebuild an occupancy map from its CSV export

    The prior variance is taken from the unobserved cells; `prior_variance`
    is used only when every cell was observed.

    Returns:
        (map, exported probabilities)
    """
    frame = _read_frame(path, MAP_COLUMNS)
    origin, resolution, width, height = _lattice(frame)
    observed = frame["observed"].to_numpy(dtype=int) != 0
    variance = frame["variance"].to_numpy(dtype=float)
    if not observed.all():
        prior_variance = float(variance[~observed][0])
    occupancy = OccupancyMap(origin, resolution, width, height, prior_variance)
    occupancy.mean = frame["mean"].to_numpy(dtype=float).copy()
    occupancy.variance = variance.copy()
    occupancy.observed = observed
    return occupancy, frame["probability"].to_numpy(dtype=float)


def write_reference(reference: ReferenceGrid, directory: PathLike, stem: str = "reference") -> Tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    template = reference.template()
    centers = template.centers()
    probability = reference.probability()
    frame = pd.DataFrame({
        "x": centers[:, 0],
        "y": centers[:, 1],
        "state": reference.state.astype(int),
        "probability": probability,
    }, columns=REFERENCE_COLUMNS)
    csv_path = directory / f"{stem}.csv"
    frame.to_csv(csv_path, index=False)
    pgm_path = write_pgm(directory / f"{stem}.pgm", probability, reference.width, reference.height)
    return csv_path, pgm_path


def read_reference(path: PathLike) -> ReferenceGrid:
    frame = _read_frame(path, REFERENCE_COLUMNS)
    origin, resolution, width, height = _lattice(frame)
    return ReferenceGrid(origin, resolution, width, height, frame["state"].to_numpy())
