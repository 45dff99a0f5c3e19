"""
CARMEN Log Parser

One message per line:

    PARAM name value
    ODOM x y theta tv rv accel ipc_timestamp hostname logger_timestamp
    FLASER n r1 ... rn x y theta odom_x odom_y odom_theta ipc_timestamp hostname logger_timestamp
    RLASER  (same layout as FLASER)

Unknown message types are skipped and counted; lines that fail to parse are
reported with their line numbers. Arbitrary bytes never escape as anything
but records, diagnostics or a typed error.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.models.errors import DatasetReadError, EmptyDatasetError
from src.models.robot import DatasetRecord
from src.observability.monitor import RunCounters, get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

LASER_KINDS = ("FLASER", "RLASER")
DEFAULT_MAX_RANGE = 80.0
_LASER_TRAILER = 9
_ODOM_FIELDS = 10


@dataclass(frozen=True)
class OdometryRecord:
    x: float
    y: float
    heading: float
    timestamp: float
    line_number: int


@dataclass
class ParsedLog:
    records: List[DatasetRecord] = field(default_factory=list)
    odometry: List[OdometryRecord] = field(default_factory=list)
    params: Dict[str, object] = field(default_factory=dict)
    skipped: int = 0
    malformed: List[Tuple[int, str]] = field(default_factory=list)

    def lasers(self, kind: str = "FLASER") -> List[DatasetRecord]:
        return [r for r in self.records if r.kind == kind]


def beam_angles(n: int) -> np.ndarray:
    """
    Robot-frame bearings of an n-beam 180 degree laser

    180/360 beams sit at i * 180/n - 90 degrees, 181/361 beams at
    i * 180/(n-1) - 90 degrees; other counts are spread evenly over the
    same half-plane.
    """
    if n in (180, 360):
        res = 180.0 / n
    elif n > 1:
        res = 180.0 / (n - 1)
    else:
        return np.zeros(n)
    return np.radians(np.arange(n) * res - 90.0)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def _param_value(text: str):
    if text == "on":
        return True
    if text == "off":
        return False
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def _parse_laser(tokens: List[str], line_number: int, max_range: float) -> DatasetRecord:
    n = int(tokens[1])
    if n < 1 or len(tokens) != 2 + n + _LASER_TRAILER:
        raise ValueError(f"declared {n} readings but line has {len(tokens)} fields")
    ranges = np.array([float(t) for t in tokens[2:2 + n]])
    trailer = tokens[2 + n:]
    pose = tuple(float(t) for t in trailer[0:3])
    odom = tuple(float(t) for t in trailer[3:6])
    timestamp = float(trailer[6])
    logger_timestamp = float(trailer[8])
    if not (np.all(np.isfinite(ranges)) and _finite(*pose, *odom, timestamp, logger_timestamp)):
        raise ValueError("non-finite value")
    return DatasetRecord(
        kind=tokens[0],
        ranges=ranges,
        angles=beam_angles(n),
        laser_pose=pose,
        odometry=odom,
        timestamp=timestamp,
        hostname=trailer[7],
        logger_timestamp=logger_timestamp,
        line_number=line_number,
        max_range=max_range,
    )


def _parse_odometry(tokens: List[str], line_number: int) -> OdometryRecord:
    if len(tokens) != _ODOM_FIELDS:
        raise ValueError(f"expected {_ODOM_FIELDS} fields, got {len(tokens)}")
    x, y, theta = (float(t) for t in tokens[1:4])
    timestamp = float(tokens[7])
    if not _finite(x, y, theta, timestamp):
        raise ValueError("non-finite value")
    return OdometryRecord(x, y, theta, timestamp, line_number)


def parse_text(text: str, max_range: float = DEFAULT_MAX_RANGE, source: str = "<text>") -> ParsedLog:
    parsed = ParsedLog()
    last_timestamp = -math.inf

    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        kind = tokens[0]
        try:
            if kind in LASER_KINDS:
                record = _parse_laser(tokens, line_number, max_range)
                if record.timestamp < last_timestamp:
                    raise ValueError("timestamp goes backwards")
                last_timestamp = record.timestamp
                parsed.records.append(record)
            elif kind == "ODOM":
                parsed.odometry.append(_parse_odometry(tokens, line_number))
            elif kind == "PARAM" and len(tokens) >= 3:
                parsed.params[tokens[1]] = _param_value(tokens[2])
            else:
                parsed.skipped += 1
        except (ValueError, IndexError, OverflowError) as e:
            parsed.malformed.append((line_number, f"{kind}: {e}"))

    for line_number, reason in parsed.malformed:
        logger.warning("malformed_record", source=source, line=line_number, reason=reason)
    return parsed


def parse_log(
    path: PathLike,
    max_range: float = DEFAULT_MAX_RANGE,
    counters: Optional[RunCounters] = None,
) -> ParsedLog:
    """
    Parse a CARMEN log file

    Raises:
        DatasetReadError: the file cannot be read
        EmptyDatasetError: no laser record parsed
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DatasetReadError(f"cannot read {path}: {e}") from e

    parsed = parse_text(data.decode("utf-8", errors="replace"), max_range, source=str(path))
    if counters is not None:
        counters.skipped_records += parsed.skipped
        counters.malformed_records += len(parsed.malformed)
    if not parsed.records:
        raise EmptyDatasetError(f"{path}: no laser records")

    logger.info(
        "log_parsed",
        source=str(path),
        records=len(parsed.records),
        odometry=len(parsed.odometry),
        skipped=parsed.skipped,
        malformed=len(parsed.malformed),
    )
    return parsed


def format_record(record: DatasetRecord) -> str:
    """Inverse of the laser-line parser"""
    values = [
        record.kind,
        str(record.ranges.size),
        *(repr(float(r)) for r in record.ranges),
        *(repr(float(v)) for v in record.laser_pose),
        *(repr(float(v)) for v in record.odometry),
        repr(float(record.timestamp)),
        record.hostname,
        repr(float(record.logger_timestamp)),
    ]
    return " ".join(values)
