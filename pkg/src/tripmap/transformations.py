"""
Coordinate transformation operations.

"""

#
# _|_|_|_|_|  _|_|_|    _|_|_|  _|_|_|
#     _|      _|    _|    _|    _|    _|
#     _|      _|_|_|      _|    _|_|_|
#     _|      _|    _|    _|    _|
#     _|      _|    _|  _|_|_|  _|
#
#

from __future__ import annotations
from dataclasses import dataclass, field
import numpy as np
import numpy.typing as npt
from scipy.linalg import polar
from . import common

nparr = npt.NDArray[np.float64]


def rotation_matrix_2d(ang: float) -> nparr:
    """
    Returns a 2D rotation matrix.

    Parameters:
        ang: Angle in radians, counterclockwise.

    Returns:
        A 2x2 rotation matrix.

    Example:
        >>> rotation_matrix_2d(np.pi / 2)
        array([[ 6.123234e-17, -1.000000e+00],
               [ 1.000000e+00,  6.123234e-17]])

    """

    return np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])


def yaw_matrix(yaw: float) -> nparr:
    """
    Rotation about the world z axis.

    Example:
        >>> res = yaw_matrix(np.pi / 2) @ np.array([1.0, 0.0, 0.0])
        >>> assert np.allclose(res, [0.0, 1.0, 0.0])

    """
    mat = np.eye(3)
    mat[:2, :2] = rotation_matrix_2d(yaw)
    return mat


def orthonormality_error(mat: nparr) -> float:
    """
    Largest absolute deviation of `mat.T @ mat` from the identity.

    """
    mat = np.asarray(mat, dtype=float)
    return float(np.max(np.abs(mat.T @ mat - np.eye(3))))


def nearest_rotation(mat: nparr) -> nparr:
    """
    Projects a 3x3 matrix onto the closest proper rotation, using the
    orthogonal factor of its polar decomposition.

    Example:
        >>> drifted = np.eye(3) + 1e-4 * np.array(
        ...     [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        >>> rot = nearest_rotation(drifted)
        >>> assert orthonormality_error(rot) < 1e-12
        >>> assert abs(np.linalg.det(rot) - 1.0) < 1e-12

    """
    unitary, _ = polar(np.asarray(mat, dtype=float))
    if np.linalg.det(unitary) < 0.00:
        raise ValueError("Matrix is a reflection, not a rotation.")
    return unitary


@dataclass(repr=False)
class Pose:
    """
    Sensor-to-world rigid transform.

    Attributes:
        rotation: 3x3 orthonormal matrix.
        translation: 3-vector, meters, world frame.

    Example:
        >>> pose = Pose.identity()
        >>> pose.apply(np.array([[1.0, 2.0, 3.0]]))
        array([[1., 2., 3.]])
        >>> Pose(np.diag([1.0, 1.0, 2.0]), np.zeros(3))
        Traceback (most recent call last):
            ...
        ValueError: Rotation is not orthonormal (error 3.000e+00)

    """

    rotation: nparr
    translation: nparr = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.rotation)) or not np.all(
            np.isfinite(self.translation)
        ):
            raise ValueError("Pose contains non-finite entries")
        error = orthonormality_error(self.rotation)
        if error > common.EPSILON:
            raise ValueError(
                f"Rotation is not orthonormal (error {error:.3e})"
            )
        det = np.linalg.det(self.rotation)
        if abs(det - 1.00) > common.EPSILON:
            raise ValueError(f"Rotation determinant is {det:.6f}, not 1")

    def __repr__(self):
        res = ""
        res += "Pose object\n"
        res += f"rotation:\n{self.rotation}\n"
        res += f"translation: {self.translation}\n"
        return res

    @classmethod
    def identity(cls) -> Pose:
        """
        The identity transform.

        """
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, yaw: float, translation: nparr) -> Pose:
        """
        Planar pose: rotation about z followed by a translation.

        """
        return cls(yaw_matrix(yaw), np.asarray(translation, dtype=float))

    @classmethod
    def from_matrix34(cls, values: nparr) -> Pose:
        """
        Builds a pose from a row-major 3x4 `[R|t]` matrix, twelve
        values in the KITTI odometry convention.

        """
        mat = np.asarray(values, dtype=float).reshape(3, 4)
        return cls(mat[:, :3], mat[:, 3])

    def matrix34(self) -> nparr:
        """
        The row-major 3x4 `[R|t]` matrix.

        """
        return np.hstack((self.rotation, self.translation.reshape(3, 1)))

    def apply(self, points: nparr) -> nparr:
        """
        Transforms (N, 3) sensor-frame points to the world frame.

        """
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def rotate(self, vectors: nparr) -> nparr:
        """
        Rotates (N, 3) direction vectors to the world frame.

        """
        return np.asarray(vectors, dtype=float) @ self.rotation.T
