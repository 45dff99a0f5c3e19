import numpy as np
import pytest

from src.models.errors import InvalidInputError
from src.models.robot import World
from src.simulation.world import build_world, is_simple, star_polygon


def test_star_world_layout():
    world = build_world("star")
    assert world.bounds == (-10.0, -10.0, 10.0, 10.0)
    assert world.solid == (False, True)
    assert world.segments().shape == (20, 4)
    for poly in world.polygons:
        assert is_simple(poly)


def test_star_polygon_radii():
    poly = star_polygon(8.0, 5.0)
    radii = np.hypot(poly[:, 0], poly[:, 1])
    np.testing.assert_allclose(radii[0::2], 8.0)
    np.testing.assert_allclose(radii[1::2], 5.0)


def test_free_space_of_the_star_world():
    world = build_world("star")
    inside = world.in_free_space(np.array([[4.0, 0.0], [0.0, 0.0], [9.5, 9.5], [0.0, 4.0]]))
    np.testing.assert_array_equal(inside, [True, False, False, True])
    np.testing.assert_array_equal(world.contains_obstacle(np.array([[0.0, 0.0], [4.0, 0.0]])), [True, False])


def test_box_and_empty_worlds():
    box = build_world("BOX")
    assert box.in_free_space(np.array([[0.0, 0.0]]))[0]
    assert not box.in_free_space(np.array([[5.5, 0.0]]))[0]
    empty = build_world("empty")
    assert empty.segments().shape == (0, 4)
    assert empty.in_free_space(np.array([[9.0, -9.0]]))[0]


def test_unknown_world():
    with pytest.raises(InvalidInputError):
        build_world("maze")


def test_self_intersecting_polygon_is_not_simple():
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert not is_simple(bowtie)


def test_world_validation():
    with pytest.raises(InvalidInputError):
        World("bad", (), (1.0, 0.0, 0.0, 1.0))
    with pytest.raises(InvalidInputError):
        World("bad", (np.zeros((2, 2)),), (0.0, 0.0, 1.0, 1.0))
    with pytest.raises(InvalidInputError):
        World("bad", (np.eye(3)[:, :2],), (0.0, 0.0, 1.0, 1.0), solid=(True, False))
