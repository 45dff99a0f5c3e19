import math

import numpy as np
import pytest

from src.ingest.reference import GridLattice, lattice_around, reference_map
from src.mapping.occupancy import FREE, OCCUPIED, UNKNOWN
from src.models.errors import InvalidInputError
from src.models.robot import PoseBelief, Scan


def test_lattice_around_is_aligned_and_covers_points():
    points = np.array([[-1.3, 0.2], [2.6, 3.9]])
    lattice = lattice_around(points, 0.5)
    assert lattice.origin == (-2.0, -0.5)
    x_max = lattice.origin[0] + lattice.width * lattice.resolution
    y_max = lattice.origin[1] + lattice.height * lattice.resolution
    assert x_max > 2.6 and y_max > 3.9


def test_single_beam_reference():
    lattice = GridLattice((0.0, 0.0), 1.0, 6, 3)
    scan = Scan(angles=[0.0], ranges=[3.3], max_range=10.0)
    reference = reference_map([PoseBelief(0.5, 1.5, 0.0)], [scan], lattice=lattice)
    row = reference.state.reshape(3, 6)[1]
    np.testing.assert_array_equal(row, [FREE, FREE, FREE, OCCUPIED, UNKNOWN, UNKNOWN])
    assert (reference.state.reshape(3, 6)[0] == UNKNOWN).all()


def test_miss_marks_only_free_cells():
    lattice = GridLattice((0.0, 0.0), 1.0, 6, 3)
    scan = Scan(angles=[0.0], ranges=[3.0], max_range=3.0)
    reference = reference_map([PoseBelief(0.5, 1.5, 0.0)], [scan], lattice=lattice)
    assert not (reference.state == OCCUPIED).any()
    assert (reference.state == FREE).sum() == 4


def test_occupied_wins_over_free():
    lattice = GridLattice((0.0, 0.0), 1.0, 6, 3)
    hit = Scan(angles=[0.0], ranges=[2.5], max_range=10.0)
    through = Scan(angles=[0.0], ranges=[5.0], max_range=5.0)
    pose = PoseBelief(0.5, 1.5, 0.0)
    reference = reference_map([pose, pose], [hit, through], lattice=lattice)
    assert reference.state.reshape(3, 6)[1, 3] == OCCUPIED
    assert reference.state.reshape(3, 6)[1, 4] == FREE


def test_sized_lattice_holds_all_beams():
    scan = Scan(angles=np.linspace(0, 2 * math.pi, 16, endpoint=False), ranges=np.full(16, 2.0), max_range=10.0)
    reference = reference_map([PoseBelief(3.0, -1.0, 0.4)], [scan], resolution=0.25)
    assert (reference.state == OCCUPIED).sum() >= 12
    assert reference.resolution == 0.25


def test_argument_validation():
    scan = Scan(angles=[0.0], ranges=[1.0], max_range=5.0)
    with pytest.raises(InvalidInputError):
        reference_map([], [scan], resolution=0.5)
    with pytest.raises(InvalidInputError):
        reference_map([PoseBelief(0, 0, 0)], [scan])
