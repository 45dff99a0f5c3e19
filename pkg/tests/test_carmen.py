import math

import numpy as np
import pytest

from src.ingest.carmen import beam_angles, format_record, parse_log, parse_text
from src.models.errors import DatasetReadError, EmptyDatasetError
from src.observability.monitor import RunCounters


def laser_line(ranges, t, kind="FLASER", pose=(1.0, 2.0, 0.5)):
    values = [kind, str(len(ranges)), *map(str, ranges), *map(str, pose), "1.1", "2.1", "0.4", str(t), "host", str(t + 0.01)]
    return " ".join(values)


LOG = "\n".join([
    "# CARMEN log",
    "PARAM robot_front_laser_max 50.0",
    "PARAM robot_use_laser on",
    "ODOM 0.0 0.0 0.0 0.1 0.0 0.0 1.0 host 1.01",
    laser_line([1.0, 2.0, 3.0], 1.5),
    "SONAR 1 2 3",
    laser_line([4.0, 0.0, 90.0], 2.0, kind="RLASER"),
    "FLASER 3 1.0 2.0",
    laser_line([1.0, 1.5, 2.0], 2.5),
])


def test_parse_records_and_params():
    parsed = parse_text(LOG)
    assert len(parsed.records) == 3
    assert [r.kind for r in parsed.records] == ["FLASER", "RLASER", "FLASER"]
    assert len(parsed.lasers("FLASER")) == 2
    assert parsed.params == {"robot_front_laser_max": 50.0, "robot_use_laser": True}
    assert len(parsed.odometry) == 1
    assert parsed.skipped == 1
    assert [line for line, _ in parsed.malformed] == [8]


def test_record_fields():
    record = parse_text(LOG).records[0]
    np.testing.assert_array_equal(record.ranges, [1.0, 2.0, 3.0])
    assert record.laser_pose == (1.0, 2.0, 0.5)
    assert record.odometry == (1.1, 2.1, 0.4)
    assert record.timestamp == 1.5
    assert record.hostname == "host"
    assert record.line_number == 5


def test_zero_and_far_readings_become_misses():
    record = parse_text(LOG, max_range=80.0).records[1]
    scan = record.to_scan()
    np.testing.assert_array_equal(scan.hits, [True, False, False])
    np.testing.assert_array_equal(scan.ranges, [4.0, 80.0, 80.0])


@pytest.mark.parametrize("n,first,step", [(180, -90.0, 1.0), (181, -90.0, 1.0), (361, -90.0, 0.5), (360, -90.0, 0.5)])
def test_beam_angles(n, first, step):
    angles = np.degrees(beam_angles(n))
    assert angles.size == n
    assert angles[0] == pytest.approx(first)
    assert angles[1] - angles[0] == pytest.approx(step)


def test_backwards_timestamp_is_malformed():
    text = "\n".join([laser_line([1.0], 5.0), laser_line([1.0], 4.0)])
    parsed = parse_text(text)
    assert len(parsed.records) == 1
    assert parsed.malformed[0][0] == 2


def test_non_finite_values_are_malformed():
    parsed = parse_text(laser_line([1.0, float("nan")], 1.0))
    assert not parsed.records and len(parsed.malformed) == 1


def test_format_record_round_trip():
    record = parse_text(LOG).records[0]
    again = parse_text(format_record(record)).records[0]
    np.testing.assert_array_equal(again.ranges, record.ranges)
    assert again.laser_pose == record.laser_pose
    assert again.timestamp == record.timestamp


def test_parse_log_counts_and_errors(tmp_path):
    path = tmp_path / "log.txt"
    path.write_text(LOG)
    counters = RunCounters()
    parsed = parse_log(path, counters=counters)
    assert len(parsed.records) == 3
    assert counters.skipped_records == 1
    assert counters.malformed_records == 1

    (tmp_path / "empty.txt").write_text("PARAM a 1\n")
    with pytest.raises(EmptyDatasetError):
        parse_log(tmp_path / "empty.txt")
    with pytest.raises(DatasetReadError):
        parse_log(tmp_path / "missing.txt")


def test_random_bytes_never_escape_untyped(tmp_path, rng):
    valid = LOG.encode()
    for trial in range(200):
        data = bytearray(valid)
        for _ in range(int(rng.integers(1, 40))):
            pos = int(rng.integers(0, len(data)))
            data[pos] = int(rng.integers(0, 256))
        if trial % 5 == 0:
            data = bytes(rng.integers(0, 256, size=int(rng.integers(0, 400)), dtype=np.uint8))
        path = tmp_path / f"fuzz{trial}.log"
        path.write_bytes(bytes(data))
        try:
            parsed = parse_log(path)
        except (DatasetReadError, EmptyDatasetError):
            continue
        for record in parsed.records:
            assert np.all(np.isfinite(record.ranges))
            assert all(math.isfinite(v) for v in record.laser_pose)
