"""
Pose and rotation tests.

"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation
from tripmap.transformations import Pose
from tripmap.transformations import nearest_rotation
from tripmap.transformations import orthonormality_error
from tripmap.transformations import yaw_matrix


def test_pose_round_trip_matrix34():
    rot = Rotation.from_rotvec([0.1, 0.2, 0.3]).as_matrix() @ yaw_matrix(0.7)
    pose = Pose(rot, np.array([1.0, -2.0, 0.5]))
    again = Pose.from_matrix34(pose.matrix34().reshape(-1))
    assert np.array_equal(again.rotation, pose.rotation)
    assert np.array_equal(again.translation, pose.translation)


def test_pose_apply_and_rotate():
    pose = Pose.from_yaw(np.pi / 2, np.array([1.0, 0.0, 2.0]))
    pts = pose.apply(np.array([[1.0, 0.0, 0.0]]))
    assert np.allclose(pts, [[1.0, 1.0, 2.0]])
    vec = pose.rotate(np.array([[1.0, 0.0, 0.0]]))
    assert np.allclose(vec, [[0.0, 1.0, 0.0]])


def test_pose_rejects_bad_rotation():
    with pytest.raises(ValueError):
        Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        Pose(np.eye(3) * 1.01, np.zeros(3))


def test_nearest_rotation_of_drifted_matrix():
    rng = np.random.default_rng(4)
    rotations = Rotation.random(50, random_state=4).as_matrix()
    for rot in rotations:
        drifted = rot + 1.0e-4 * rng.normal(size=(3, 3))
        fixed = nearest_rotation(drifted)
        assert orthonormality_error(fixed) < 1.0e-12
        assert np.abs(fixed - rot).max() < 1.0e-3


def test_nearest_rotation_rejects_reflection():
    with pytest.raises(ValueError):
        nearest_rotation(np.diag([1.0, 1.0, -1.0]))
