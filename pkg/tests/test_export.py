import numpy as np
import pandas as pd
import pytest

from src.mapping.export import (
    MAP_COLUMNS,
    probability_to_gray,
    read_map,
    read_pgm,
    read_reference,
    write_map,
    write_pgm,
    write_reference,
)
from src.mapping.occupancy import FREE, OCCUPIED, UNKNOWN, OccupancyMap, ReferenceGrid, SubMap, bcm_fuse
from src.models.errors import DatasetReadError


@pytest.fixture
def fused_map():
    occupancy = OccupancyMap((-1.0, -1.0), 0.5, 6, 4, prior_variance=1.5)
    bcm_fuse(occupancy, SubMap([[-0.75, -0.75], [1.25, 0.75]], [2.0, -1.0], [0.3, 0.4]))
    return occupancy


def test_gray_levels():
    np.testing.assert_array_equal(probability_to_gray(np.array([0.0, 0.5, 1.0])), [255, 128, 0])


def test_pgm_layout(tmp_path):
    probability = np.zeros(6)
    probability[0] = 1.0  # row 0 is the bottom of the map
    path = write_pgm(tmp_path / "m.pgm", probability, 3, 2)
    data = path.read_bytes()
    assert data.startswith(b"P5\n3 2\n255\n")
    pixels = np.frombuffer(data[len(b"P5\n3 2\n255\n"):], dtype=np.uint8).reshape(2, 3)
    assert pixels[1, 0] == 0
    assert pixels[0, 0] == 255


def test_pgm_round_trip(tmp_path, rng):
    probability = rng.uniform(0, 1, size=20)
    write_pgm(tmp_path / "m.pgm", probability, 5, 4)
    back, width, height = read_pgm(tmp_path / "m.pgm")
    assert (width, height) == (5, 4)
    np.testing.assert_allclose(back, probability, atol=0.5 / 255 + 1e-12)


def test_read_pgm_rejects_other_formats(tmp_path):
    (tmp_path / "bad.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(DatasetReadError):
        read_pgm(tmp_path / "bad.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n4 4\n255\n\x00\x00")
    with pytest.raises(DatasetReadError):
        read_pgm(tmp_path / "short.pgm")


def test_map_csv_columns_and_unobserved_probability(tmp_path, fused_map):
    csv_path, pgm_path = write_map(fused_map, tmp_path, "GPOM")
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == MAP_COLUMNS
    assert len(frame) == fused_map.n_cells
    assert (frame["probability"][~fused_map.observed] == 0.5).all()
    assert frame["probability"][0] > 0.5
    assert pgm_path.exists()


def test_map_csv_round_trip(tmp_path, fused_map):
    csv_path, _ = write_map(fused_map, tmp_path, "GPOM")
    occupancy, probability = read_map(csv_path, prior_variance=1.5)
    assert (occupancy.width, occupancy.height) == (6, 4)
    assert occupancy.resolution == pytest.approx(0.5)
    np.testing.assert_allclose(occupancy.origin, (-1.0, -1.0))
    np.testing.assert_allclose(occupancy.mean, fused_map.mean)
    np.testing.assert_allclose(occupancy.variance, fused_map.variance)
    np.testing.assert_array_equal(occupancy.observed, fused_map.observed)


def test_map_csv_keeps_observed_cells_at_the_prior_mean(tmp_path):
    occupancy = OccupancyMap((0.0, 0.0), 1.0, 3, 1, prior_variance=2.0)
    # two equal and opposite sub-maps leave the middle cell fused at mean 0
    bcm_fuse(occupancy, SubMap([[1.5, 0.5]], [1.0], [0.5]))
    bcm_fuse(occupancy, SubMap([[1.5, 0.5]], [-1.0], [0.5]))
    assert occupancy.mean[1] == pytest.approx(0.0)
    csv_path, _ = write_map(occupancy, tmp_path, "GPOM")

    back, probability = read_map(csv_path)
    assert probability[1] == pytest.approx(0.5)
    np.testing.assert_array_equal(back.observed, [False, True, False])
    assert back.prior_variance == pytest.approx(2.0)
    assert back.variance[1] < 2.0


def test_read_map_recovers_prior_variance(tmp_path, fused_map):
    csv_path, _ = write_map(fused_map, tmp_path, "GPOM")
    occupancy, _ = read_map(csv_path)
    assert occupancy.prior_variance == pytest.approx(1.5)
    np.testing.assert_allclose(occupancy.variance[~occupancy.observed], 1.5)


def test_reference_round_trip(tmp_path):
    state = np.array([OCCUPIED, FREE, UNKNOWN, FREE, FREE, OCCUPIED])
    reference = ReferenceGrid((0.0, 0.0), 1.0, 3, 2, state)
    csv_path, _ = write_reference(reference, tmp_path)
    back = read_reference(csv_path)
    np.testing.assert_array_equal(back.state, state)
    assert (back.width, back.height) == (3, 2)


def test_incomplete_csv_is_rejected(tmp_path):
    pd.DataFrame({"x": [0.5, 1.5, 0.5], "y": [0.5, 0.5, 1.5], "mean": 0, "variance": 1, "probability": 0.5, "observed": 0}).to_csv(
        tmp_path / "bad.csv", index=False
    )
    with pytest.raises(DatasetReadError):
        read_map(tmp_path / "bad.csv")


def test_missing_columns_are_rejected(tmp_path):
    pd.DataFrame({"x": [0.5], "y": [0.5]}).to_csv(tmp_path / "bad.csv", index=False)
    with pytest.raises(DatasetReadError):
        read_map(tmp_path / "bad.csv")
