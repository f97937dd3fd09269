"""
Spherical projection of range scans into surfel maps.

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
from typing import Optional
from dataclasses import dataclass, field
import numpy as np
import numpy.typing as npt
from . import common
from .config import SensorIntrinsics
from .grid import shifted

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]
intarr = npt.NDArray[np.int64]


@dataclass(repr=False)
class RangeScan:
    """
    A single range scan.

    Attributes:
        points: (N, 3) sensor-frame coordinates, meters.
        intensity: Optional (N,) intensities. Not used by the pipeline.
        timestamp: Scan index.

    Example:
        >>> scan = RangeScan(np.array([[1.0, 0.0, 0.0], [0.1, 0.0, 0.0]]))
        >>> scan.filtered(0.3).points
        array([[1., 0., 0.]])
        >>> RangeScan(np.array([[np.nan, 0.0, 0.0]]))
        Traceback (most recent call last):
            ...
        ValueError: Scan 0 contains non-finite coordinates

    """

    points: nparr
    intensity: Optional[nparr] = field(default=None)
    timestamp: int = field(default=0)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ValueError(
                f"Scan {self.timestamp} contains non-finite coordinates"
            )
        if self.intensity is not None:
            self.intensity = np.asarray(self.intensity, dtype=np.float64)

    def __repr__(self):
        res = ""
        res += "RangeScan object\n"
        res += f"timestamp: {self.timestamp}\n"
        res += f"number of points: {len(self)}\n"
        return res

    def __len__(self):
        return self.points.shape[0]

    def filtered(self, min_range: float) -> RangeScan:
        """
        Drops points closer than `min_range`.

        """
        keep = np.linalg.norm(self.points, axis=1) >= min_range
        intensity = None if self.intensity is None else self.intensity[keep]
        return RangeScan(self.points[keep], intensity, self.timestamp)


@dataclass(repr=False)
class Surfel:
    """
    Surface element: a point with its estimated normal.

    Attributes:
        p: Position, meters, sensor frame.
        n: Unit normal with non-negative z component.
        valid: Whether the normal could be estimated.

    """

    p: nparr
    n: nparr
    valid: bool = field(default=True)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        self.n = np.asarray(self.n, dtype=np.float64)

    def __repr__(self):
        return f"Surfel(p={self.p}, n={self.n}, valid={self.valid})"


@dataclass(repr=False)
class SurfelMap:
    """
    Spherical-projection raster of surfels, indexed `[v, u]`.

    Attributes:
        intrinsics: Projection geometry.
        points: (h, w, 3) nearest point of each pixel, NaN when empty.
        normals: (h, w, 3) unit normals, NaN where invalid.
        occupied: (h, w) pixels that received a point.
        valid: (h, w) pixels with a valid surfel.
        max_range_per_column: (w,) largest range of a valid surfel in
          each column, 0 for empty columns.

    """

    intrinsics: SensorIntrinsics
    points: nparr
    normals: nparr
    occupied: boolarr
    valid: boolarr
    max_range_per_column: nparr

    def __repr__(self):
        res = ""
        res += "SurfelMap object\n"
        res += f"size: {self.intrinsics.width} x {self.intrinsics.height}\n"
        res += f"occupied pixels: {int(self.occupied.sum())}\n"
        res += f"valid surfels: {int(self.valid.sum())}\n"
        return res

    def surfel(self, u: int, v: int) -> Surfel:
        """
        The surfel at pixel (u, v).

        """
        return Surfel(
            self.points[v, u], self.normals[v, u], bool(self.valid[v, u])
        )


def window_shift(
    arr: npt.NDArray, d_v: int, d_u: int, wrap: bool, fill: object
) -> npt.NDArray:
    """
    Image counterpart of `grid.shifted`: `out[v, u] = arr[v + d_v, u + d_u]`.
    Rows never wrap; columns wrap when `wrap` is set.

    Example:
        >>> img = np.arange(6).reshape(2, 3)
        >>> window_shift(img, 0, -1, True, -1)
        array([[2, 0, 1],
               [5, 3, 4]])
        >>> window_shift(img, 1, 0, True, -1)
        array([[ 3,  4,  5],
               [-1, -1, -1]])

    """
    if not wrap:
        return shifted(arr, d_v, d_u, fill)
    out = shifted(arr, d_v, 0, fill)
    if d_u != 0:
        out = np.roll(out, -d_u, axis=1)
    return out


def _snap_into_range(coord: nparr, size: int) -> tuple[intarr, boolarr]:
    """
    Floors continuous pixel coordinates. Values within half a pixel
    outside `[0, size)` are clamped onto the border; others are
    rejected.

    """
    ok = (coord >= -0.5) & (coord <= size + 0.5)
    idx = np.floor(np.where(ok, coord, 0.00))
    idx = np.clip(idx, 0, size - 1).astype(np.int64)
    return idx, ok


def project_points(
    points: nparr, intr: SensorIntrinsics, literal_elevation: bool = False
) -> tuple[intarr, intarr, boolarr]:
    """
    Vectorized spherical projection.

    Arguments:
        points: (N, 3) sensor-frame points.
        intr: Projection geometry.
        literal_elevation: Use arcsin(z / sqrt(x^2 + y^2)); points whose
          |z| exceeds their horizontal distance are then rejected.

    Returns:
        (u, v, ok) pixel coordinates and acceptance flags. Entries
        with `ok == False` carry meaningless pixel values.

    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    horizontal = np.hypot(x, y)
    rng = np.linalg.norm(points, axis=1)
    ok = rng > 0.00
    with np.errstate(divide="ignore", invalid="ignore"):
        if intr.full_azimuth:
            azimuth = np.arctan2(y, x)
        else:
            azimuth = np.arctan(y / x)
            ok &= x > 0.00
        if literal_elevation:
            ratio = z / horizontal
            ok &= horizontal > 0.00
            ok &= np.abs(z) <= horizontal
        else:
            ratio = z / rng
        elevation = np.arcsin(np.clip(np.where(ok, ratio, 0.00), -1.00, 1.00))
    u_f = intr.width * (
        1.00 - (azimuth + intr.fov_right) / (intr.fov_left + intr.fov_right)
    )
    v_f = intr.height * (
        1.00 - (elevation + intr.fov_down) / (intr.fov_up + intr.fov_down)
    )
    u_f = np.where(ok, u_f, -1.00e9)
    v_f = np.where(ok, v_f, -1.00e9)
    u_idx, u_ok = _snap_into_range(u_f, intr.width)
    v_idx, v_ok = _snap_into_range(v_f, intr.height)
    return u_idx, v_idx, ok & u_ok & v_ok


def project_point(
    q: nparr, intr: SensorIntrinsics, literal_elevation: bool = False
) -> Optional[tuple[int, int]]:
    """
    Pixel (u, v) of a single sensor-frame point, or None when it falls
    outside the field of view.

    Example:
        >>> intr = SensorIntrinsics(width=360, height=64,
        ...     fov_up=np.pi/4, fov_down=np.pi/4)
        >>> project_point(np.array([1.0, 0.0, 0.0]), intr)
        (180, 32)
        >>> project_point(np.array([0.0, 1.0, 0.0]), intr)
        (90, 32)
        >>> project_point(np.array([1.0, 0.0, 1.0]), intr)
        (180, 0)
        >>> project_point(np.array([0.0, 0.0, 1.0]), intr) is None
        True

    """
    u_idx, v_idx, ok = project_points(
        np.asarray(q, dtype=np.float64).reshape(1, 3), intr, literal_elevation
    )
    if not ok[0]:
        return None
    return int(u_idx[0]), int(v_idx[0])


def _pca_normals(
    points: nparr,
    occupied: boolarr,
    kernel: int,
    min_support: int,
    wrap: bool,
    rows: tuple[int, int],
) -> tuple[nparr, boolarr]:
    """
    PCA normals for the image rows `rows[0]:rows[1]`.

    Window members are expressed relative to the center point so the
    covariance stays well conditioned far from the sensor.

    """
    band = slice(*rows)
    center = points[band]
    count = np.zeros(center.shape[:2])
    first = np.zeros(center.shape)
    second = np.zeros(center.shape[:2] + (3, 3))
    for d_v in range(-kernel, kernel + 1):
        for d_u in range(-kernel, kernel + 1):
            member_pts = window_shift(points, d_v, d_u, wrap, np.nan)[band]
            member_occ = window_shift(occupied, d_v, d_u, wrap, False)[band]
            rel = np.where(member_occ[..., None], member_pts - center, 0.00)
            count += member_occ
            first += rel
            second += rel[..., :, None] * rel[..., None, :]
    supported = occupied[band] & (count >= min_support)
    normals = np.full(center.shape, np.nan)
    valid = np.zeros(center.shape[:2], dtype=bool)
    if not np.any(supported):
        return normals, valid
    num = count[supported][:, None, None]
    mean = first[supported] / num[:, :, 0]
    cov = second[supported] / num - mean[:, :, None] * mean[:, None, :]
    eigvals, eigvecs = np.linalg.eigh(cov)
    normal = eigvecs[:, :, 0]
    normal = np.where(normal[:, 2:3] < 0.00, -normal, normal)
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    # collinear or coincident members leave the plane undetermined
    spread = eigvals[:, 2]
    planar = (spread > 0.00) & (
        eigvals[:, 1] > common.DEGENERACY_RATIO * spread
    )
    sup_rows, sup_cols = np.nonzero(supported)
    normals[sup_rows[planar], sup_cols[planar]] = normal[planar]
    valid[sup_rows[planar], sup_cols[planar]] = True
    return normals, valid


def build_surfel_map(
    scan: RangeScan,
    intr: SensorIntrinsics,
    normal_kernel: int = 1,
    min_support: int = 3,
    min_range: float = 0.30,
    literal_elevation: bool = False,
    threads: int = 1,
) -> SurfelMap:
    """
    Projects a scan into a surfel map.

    Each pixel keeps its nearest-range point (first in scan order on
    ties). Normals come from PCA over the occupied pixels of the
    (2k+1)x(2k+1) window around each pixel and point upwards.

    Arguments:
        scan: Sensor-frame scan.
        intr: Projection geometry.
        normal_kernel: Window half-width k.
        min_support: Minimum occupied pixels in the window.
        min_range: Points closer than this are dropped first.
        literal_elevation: See `project_points`.
        threads: Worker threads (image rows are split among them).

    Example:
        >>> intr = SensorIntrinsics(width=36, height=8,
        ...     fov_up=0.2, fov_down=0.2)
        >>> smap = build_surfel_map(
        ...     RangeScan(np.array([[2.0, 0.0, 0.0]])), intr)
        >>> int(smap.occupied.sum()), int(smap.valid.sum())
        (1, 0)

    """
    width, height = intr.width, intr.height
    scan = scan.filtered(min_range)
    points = np.full((height, width, 3), np.nan)
    occupied = np.zeros((height, width), dtype=bool)
    if len(scan) > 0:
        u_idx, v_idx, ok = project_points(scan.points, intr, literal_elevation)
        order = np.nonzero(ok)[0]
        pixel = v_idx[order] * width + u_idx[order]
        rng = np.linalg.norm(scan.points[order], axis=1)
        # sort by pixel, then range, then scan order
        perm = np.lexsort((order, rng, pixel))
        _, first = np.unique(pixel[perm], return_index=True)
        winners = perm[first]
        win_pix = pixel[winners]
        points.reshape(-1, 3)[win_pix] = scan.points[order[winners]]
        occupied.reshape(-1)[win_pix] = True

    parts = common.chunked_map(
        lambda lo, hi: _pca_normals(
            points,
            occupied,
            normal_kernel,
            min_support,
            intr.full_azimuth,
            (lo, hi),
        ),
        height,
        threads,
    )
    if parts:
        normals = np.concatenate([part[0] for part in parts], axis=0)
        valid = np.concatenate([part[1] for part in parts], axis=0)
    else:
        normals = np.full((height, width, 3), np.nan)
        valid = np.zeros((height, width), dtype=bool)

    ranges = np.where(
        valid, np.linalg.norm(np.nan_to_num(points), axis=2), 0.00
    )
    return SurfelMap(
        intrinsics=intr,
        points=points,
        normals=normals,
        occupied=occupied,
        valid=valid,
        max_range_per_column=ranges.max(axis=0),
    )
