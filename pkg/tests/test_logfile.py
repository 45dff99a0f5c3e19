import numpy as np
import pytest

from src.models.errors import DatasetReadError, EmptyDatasetError
from src.models.robot import MotionNoise, ScanConfig
from src.simulation.logfile import HEADER, read_log, write_log
from src.simulation.motion import star_loop_controls
from src.simulation.scenario import simulate
from src.simulation.world import build_world


@pytest.fixture
def trajectory():
    start, controls = star_loop_controls(4.0, 5)
    return simulate(
        build_world("star"), controls, MotionNoise.from_profile("Q4"),
        ScanConfig(n_beams=18, max_range=10.0), seed=2, start=start, perturb_means=True,
    )


def test_log_round_trip_is_exact(tmp_path, trajectory):
    path = write_log(trajectory, tmp_path / "run.log")
    assert path.read_text().splitlines()[0] == HEADER
    back = read_log(path)
    assert back.world_name == "star"
    assert back.scan_config == trajectory.scan_config
    assert len(back) == len(trajectory)
    for a, b in zip(back.beliefs, trajectory.beliefs):
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.covariance, b.covariance)
    for a, b in zip(back.true_poses, trajectory.true_poses):
        np.testing.assert_array_equal(a.mean, b.mean)
    for a, b in zip(back.scans, trajectory.scans):
        np.testing.assert_array_equal(a.ranges, b.ranges)
        np.testing.assert_array_equal(a.angles, b.angles)


def test_wrong_header(tmp_path):
    (tmp_path / "x.log").write_text("# something else\n")
    with pytest.raises(DatasetReadError):
        read_log(tmp_path / "x.log")


def test_no_steps(tmp_path):
    (tmp_path / "x.log").write_text(f"{HEADER}\nWORLD star\nSCANCONFIG 4 10.0 6.283185307179586\n")
    with pytest.raises(EmptyDatasetError):
        read_log(tmp_path / "x.log")


def test_malformed_step_names_the_line(tmp_path, trajectory):
    path = write_log(trajectory, tmp_path / "run.log")
    lines = path.read_text().splitlines()
    lines[4] = lines[4].replace("STEP 1", "STEP 1 oops", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetReadError, match=":5:"):
        read_log(path)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetReadError):
        read_log(tmp_path / "absent.log")
