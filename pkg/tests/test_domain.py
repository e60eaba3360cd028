import numpy as np
import pytest

from phiconj.domain import Box


def test_open_and_closed_faces():
    assert Box.nonnegative(2).contains([0.0, 1.0])
    assert not Box.positive(2).contains([0.0, 1.0])
    assert Box.positive(1).contains([1e-300])


def test_infinite_faces_are_open():
    b = Box.full(2)
    assert not b.lower_closed.any() and not b.upper_closed.any()
    assert not b.bounded


def test_stack_membership():
    b = Box.cube(2, -1, 1)
    pts = np.array([[0, 0], [1, 1], [1.1, 0]])
    np.testing.assert_array_equal(b.contains(pts), [True, True, False])


def test_intersection_keeps_strictest_face():
    a = Box.nonnegative(1)
    b = Box.positive(1)
    ab = a.intersect(b)
    assert not ab.contains([0.0])
    assert Box.cube(1, 0, 1).intersect(Box.cube(1, 2, 3)) is None


def test_bad_boxes():
    with pytest.raises(ValueError):
        Box(np.array([1.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        Box.cube(1, 0, 1).intersect(Box.cube(2, 0, 1))
