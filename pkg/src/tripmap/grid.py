"""
Planar grid geometry shared by the sparse, local and static maps.

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
from . import common

nparr = npt.NDArray[np.float64]

# tolerance (in cells) when checking lattice alignment
ALIGNMENT_TOL = 1.0e-6


@dataclass(repr=False)
class GridSpec:
    """
    Axis-aligned planar grid.

    Cells are stored row-major as `[iy, ix]`. The origin is the world
    (x, y) of the lower-left corner of cell (0, 0), so the center of
    cell (iy, ix) is `origin + (ix + 0.5, iy + 0.5) * resolution`.

    Attributes:
        resolution: Cell edge length, meters.
        extent: (width, height) of the grid, meters. Both are positive
          multiples of `resolution`.
        origin: World (x, y) of the lower-left corner of cell (0, 0).

    Example:
        >>> spec = GridSpec(0.5, (2.0, 1.0))
        >>> spec.shape
        (2, 4)
        >>> spec.cell_center(1, 3)
        (1.75, 0.75)
        >>> GridSpec(0.3, (1.0, 1.0))
        Traceback (most recent call last):
            ...
        ValueError: Extent 1.0 is not a multiple of resolution 0.3

    """

    resolution: float
    extent: tuple[float, float]
    origin: tuple[float, float] = field(default=(0.00, 0.00))

    def __post_init__(self):
        self.resolution = float(self.resolution)
        self.extent = (float(self.extent[0]), float(self.extent[1]))
        self.origin = (float(self.origin[0]), float(self.origin[1]))
        if not self.resolution > 0.00:
            raise ValueError(
                f"Resolution must be positive, got {self.resolution}"
            )
        for ext in self.extent:
            cells = ext / self.resolution
            if ext <= 0.00 or abs(cells - round(cells)) > ALIGNMENT_TOL:
                raise ValueError(
                    f"Extent {ext} is not a multiple of "
                    f"resolution {self.resolution}"
                )

    def __repr__(self):
        res = ""
        res += "GridSpec object\n"
        res += f"resolution: {self.resolution}\n"
        res += f"extent: {self.extent}\n"
        res += f"origin: {self.origin}\n"
        res += f"shape: {self.shape}\n"
        return res

    @property
    def shape(self) -> tuple[int, int]:
        """
        (rows, columns) = (ny, nx).

        """
        return (
            int(round(self.extent[1] / self.resolution)),
            int(round(self.extent[0] / self.resolution)),
        )

    @classmethod
    def centered(
        cls,
        resolution: float,
        extent: tuple[float, float],
        center: tuple[float, float],
        lattice_origin: tuple[float, float] = (0.00, 0.00),
    ) -> GridSpec:
        """
        A window of the given extent centered on `center`, snapped to
        the lattice that has a cell corner at `lattice_origin`.

        Example:
            >>> spec = GridSpec.centered(0.1, (6.0, 6.0), (1.23, -0.04))
            >>> spec.lattice_offset((0.0, 0.0))
            (-18, -30)

        """
        offsets = []
        for axis in range(2):
            corner = center[axis] - extent[axis] / 2.00
            cells = (corner - lattice_origin[axis]) / resolution
            offsets.append(int(np.floor(cells + 0.5)))
        origin = (
            lattice_origin[0] + offsets[0] * resolution,
            lattice_origin[1] + offsets[1] * resolution,
        )
        return cls(resolution, extent, origin)

    def lattice_offset(
        self, lattice_origin: tuple[float, float]
    ) -> tuple[int, int]:
        """
        Integer (ix, iy) of this grid's cell (0, 0) on the lattice that
        has a cell corner at `lattice_origin`.

        Raises:
            ValueError: If the grid corners do not fall on the lattice.

        """
        offsets = []
        for axis in range(2):
            shift = self.origin[axis] - lattice_origin[axis]
            cells = shift / self.resolution
            if abs(cells - round(cells)) > ALIGNMENT_TOL:
                raise ValueError(
                    f"Grid origin {self.origin} is not aligned with the "
                    f"lattice at {lattice_origin} "
                    f"(resolution {self.resolution})"
                )
            offsets.append(int(round(cells)))
        return (offsets[0], offsets[1])

    def cell_center(self, iy: int, ix: int) -> tuple[float, float]:
        """
        World (x, y) of a cell center.

        """
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def cell_centers(self) -> tuple[nparr, nparr]:
        """
        (x, y) arrays of shape `self.shape` with every cell center.

        """
        n_y, n_x = self.shape
        xs = self.origin[0] + (np.arange(n_x) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(n_y) + 0.5) * self.resolution
        grid_x, grid_y = np.meshgrid(xs, ys)
        return grid_x, grid_y

    def locate(self, x: nparr, y: nparr) -> tuple[nparr, nparr, nparr]:
        """
        Cell indices of world positions.

        Returns:
            (iy, ix, inside) where `inside` flags positions that fall
            within the grid.

        """
        n_y, n_x = self.shape
        ix = np.floor((np.asarray(x) - self.origin[0]) / self.resolution)
        iy = np.floor((np.asarray(y) - self.origin[1]) / self.resolution)
        inside = (ix >= 0) & (ix < n_x) & (iy >= 0) & (iy < n_y)
        return iy.astype(np.int64), ix.astype(np.int64), inside

    def same_lattice(self, other: GridSpec) -> bool:
        """
        True if both grids have the same resolution and their corners
        fall on a common lattice.

        """
        if abs(self.resolution - other.resolution) > common.TINY:
            return False
        try:
            self.lattice_offset(other.origin)
        except ValueError:
            return False
        return True


def disk_offsets(
    radius: float, resolution: float
) -> list[tuple[int, int, float]]:
    """
    Cell offsets (dy, dx, distance) within a Euclidean radius,
    excluding the boundary, in row-major order. The square superscribing
    the disk is scanned and each offset tested exactly.

    Example:
        >>> [off[:2] for off in disk_offsets(0.15, 0.1)][:4]
        [(-1, -1), (-1, 0), (-1, 1), (0, -1)]
        >>> disk_offsets(0.15, 0.1)[4]
        (0, 0, 0.0)
        >>> len(disk_offsets(0.1, 0.1))
        1

    """
    reach = int(np.ceil(radius / resolution))
    offsets = []
    for d_y in range(-reach, reach + 1):
        for d_x in range(-reach, reach + 1):
            dist = float(np.hypot(d_x * resolution, d_y * resolution))
            if dist < radius:
                offsets.append((d_y, d_x, dist))
    return offsets


def shifted(arr: npt.NDArray, d_y: int, d_x: int, fill: object) -> npt.NDArray:
    """
    Returns `out` with `out[iy, ix] = arr[iy + d_y, ix + d_x]`, using
    `fill` where the source falls outside the array.

    Example:
        >>> shifted(np.arange(4).reshape(2, 2), 0, 1, -1)
        array([[ 1, -1],
               [ 3, -1]])

    """
    out = np.full_like(arr, fill)
    n_y, n_x = arr.shape[:2]
    if abs(d_y) >= n_y or abs(d_x) >= n_x:
        return out
    dst_y = slice(max(0, -d_y), n_y - max(0, d_y))
    src_y = slice(max(0, d_y), n_y - max(0, -d_y))
    dst_x = slice(max(0, -d_x), n_x - max(0, d_x))
    src_x = slice(max(0, d_x), n_x - max(0, -d_x))
    out[dst_y, dst_x] = arr[src_y, src_x]
    return out
