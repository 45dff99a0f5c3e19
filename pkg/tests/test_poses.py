import numpy as np
import pytest

from src.ingest.poses import associate, clip_covariance, load_pose_track, write_pose_track
from src.models.errors import DatasetReadError, EmptyDatasetError, InvalidInputError
from src.models.robot import DatasetRecord, PoseBelief, PoseTrack
from src.observability.monitor import RunCounters


def record(t):
    return DatasetRecord(
        kind="FLASER", ranges=np.ones(3), angles=np.zeros(3), laser_pose=(0, 0, 0), odometry=(0, 0, 0),
        timestamp=t, hostname="h", logger_timestamp=t, line_number=1, max_range=80.0,
    )


def test_load_track_with_timestamps(tmp_path):
    path = tmp_path / "track.txt"
    path.write_text(
        "# id x y theta c11 c12 c13 c22 c23 c33 t\n"
        "0 1.0 2.0 0.1 0.01 0.0 0.0 0.02 0.0 0.03 10.0\n"
        "1 1.5 2.5 0.2 0.01 0.001 0.0 0.02 0.0 0.03 11.0\n"
    )
    track = load_pose_track(path)
    assert track.ids == [0, 1]
    assert track.timestamps == [10.0, 11.0]
    np.testing.assert_allclose(track.poses[1].covariance[0, 1], 0.001)
    np.testing.assert_allclose(track.poses[1].covariance[1, 0], 0.001)


def test_track_without_timestamps(tmp_path):
    path = tmp_path / "track.txt"
    path.write_text("0 0 0 0 0 0 0 0 0 0\n")
    track = load_pose_track(path)
    assert track.timestamps is None and len(track) == 1


def test_non_psd_covariance_is_clipped_and_counted(tmp_path):
    path = tmp_path / "track.txt"
    path.write_text("0 0 0 0 1.0 2.0 0.0 1.0 0.0 1.0\n")
    counters = RunCounters()
    track = load_pose_track(path, counters=counters)
    assert counters.pose_covariance_clips == 1
    assert np.linalg.eigvalsh(track.poses[0].covariance).min() >= 0


def test_clip_leaves_psd_alone():
    cov = np.diag([1.0, 2.0, 3.0])
    clipped, changed = clip_covariance(cov)
    assert not changed
    np.testing.assert_array_equal(clipped, cov)


@pytest.mark.parametrize("line", ["0 1 2 3\n", "0 a 0 0 0 0 0 0 0 0\n"])
def test_malformed_track_lines(tmp_path, line):
    path = tmp_path / "track.txt"
    path.write_text(line)
    with pytest.raises(DatasetReadError):
        load_pose_track(path)


def test_empty_track(tmp_path):
    (tmp_path / "track.txt").write_text("# nothing\n")
    with pytest.raises(EmptyDatasetError):
        load_pose_track(tmp_path / "track.txt")


def test_write_and_reload(tmp_path):
    track = PoseTrack(
        ids=[3, 4],
        poses=[PoseBelief(1.0, 2.0, 0.3, np.diag([0.1, 0.2, 0.3])), PoseBelief(-1.0, 0.5, -2.0)],
        timestamps=[1.0, 2.0],
    )
    back = load_pose_track(write_pose_track(track, tmp_path / "t.txt"))
    assert back.ids == [3, 4]
    for a, b in zip(back.poses, track.poses):
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.covariance, b.covariance)


def test_associate_by_nearest_timestamp():
    track = PoseTrack(ids=[0, 1, 2], poses=[PoseBelief(0, 0, 0)] * 3, timestamps=[0.0, 1.0, 2.0])
    assert associate(track, [record(0.1), record(0.5), record(1.9), record(5.0)]) == [0, 0, 2, 2]


def test_associate_falls_back_to_index():
    track = PoseTrack(ids=[0, 1], poses=[PoseBelief(0, 0, 0)] * 2)
    assert associate(track, [record(7.0), record(8.0)]) == [0, 1]
    with pytest.raises(InvalidInputError):
        associate(track, [record(7.0)], mode="index")
    with pytest.raises(InvalidInputError):
        associate(PoseTrack([0], [PoseBelief(0, 0, 0)], [0.0]), [record(0.0)], mode="spline")
