"""
Re-projection of surfels and pooled risks onto a world-frame 2.5D grid.

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
from .config import SensorIntrinsics
from .grid import GridSpec
from .projection import SurfelMap
from .steppability import RiskImage
from .transformations import Pose

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]


@dataclass(repr=False)
class ObservedCell:
    """
    One cell of the sparse grid.

    Attributes:
        o: Cell center (x, y), world frame.
        h_max: Highest accepted height.
        h_min: Lowest accepted height.
        n_z: Mean verticality of the accepted surfels.
        r_step: Largest steppability risk of the accepted surfels.
        observed: Whether any surfel was accepted.

    """

    o: tuple[float, float]
    h_max: float
    h_min: float
    n_z: float
    r_step: float
    observed: bool = field(default=True)

    def __repr__(self):
        return (
            f"ObservedCell(o={self.o}, h_max={self.h_max:.4f}, "
            f"h_min={self.h_min:.4f}, n_z={self.n_z:.4f}, "
            f"r_step={self.r_step:.4f}, observed={self.observed})"
        )


@dataclass(repr=False)
class SparseElevationGrid:
    """
    World-frame grid of the cells observed in one scan.

    Layers are `(ny, nx)` arrays holding NaN where `observed` is False.

    Attributes:
        spec: Grid geometry.
        observed: Cells with at least one accepted surfel.
        h_max, h_min, n_z, r_step: Cell layers.
        column_bound: Largest observed range of each sensor column,
          or None when inference is not bounded.
        sensor_position: World position of the sensor.
        sensor_rotation: Sensor-to-world rotation.
        intrinsics: Sensor geometry used to find the column of a cell.
        dropped: Surfels that fell outside the grid.
        overhangs: Surfels rejected as overhangs.

    """

    spec: GridSpec
    observed: boolarr
    h_max: nparr
    h_min: nparr
    n_z: nparr
    r_step: nparr
    column_bound: Optional[nparr] = field(default=None)
    sensor_position: Optional[nparr] = field(default=None)
    sensor_rotation: Optional[nparr] = field(default=None)
    intrinsics: Optional[SensorIntrinsics] = field(default=None)
    dropped: int = field(default=0)
    overhangs: int = field(default=0)

    def __repr__(self):
        res = ""
        res += "SparseElevationGrid object\n"
        res += f"shape: {self.spec.shape}\n"
        res += f"observed cells: {int(self.observed.sum())}\n"
        res += f"dropped surfels: {self.dropped}\n"
        res += f"overhang surfels: {self.overhangs}\n"
        return res

    @classmethod
    def empty(cls, spec: GridSpec) -> SparseElevationGrid:
        """
        A grid with no observed cell and no observability bound.

        Example:
            >>> grid = SparseElevationGrid.empty(GridSpec(0.1, (0.3, 0.2)))
            >>> grid.set_cell(1, 2, h_max=0.3, h_min=0.1, n_z=1.0, r_step=0.0)
            >>> grid.cell(1, 2).h_max
            0.3
            >>> grid.cell(0, 0) is None
            True

        """
        shape = spec.shape
        return cls(
            spec=spec,
            observed=np.zeros(shape, dtype=bool),
            h_max=np.full(shape, np.nan),
            h_min=np.full(shape, np.nan),
            n_z=np.full(shape, np.nan),
            r_step=np.full(shape, np.nan),
        )

    def set_cell(
        self,
        iy: int,
        ix: int,
        h_max: float,
        h_min: float,
        n_z: float,
        r_step: float,
    ) -> None:
        """
        Marks a cell observed with the given values.

        """
        if h_min > h_max:
            raise ValueError(f"h_min {h_min} exceeds h_max {h_max}")
        if not (0.00 <= n_z <= 1.00 and 0.00 <= r_step <= 1.00):
            raise ValueError("n_z and r_step must lie in [0, 1]")
        self.observed[iy, ix] = True
        self.h_max[iy, ix] = h_max
        self.h_min[iy, ix] = h_min
        self.n_z[iy, ix] = n_z
        self.r_step[iy, ix] = r_step

    def cell(self, iy: int, ix: int) -> Optional[ObservedCell]:
        """
        The observed cell at (iy, ix), or None.

        """
        if not self.observed[iy, ix]:
            return None
        return ObservedCell(
            o=self.spec.cell_center(iy, ix),
            h_max=float(self.h_max[iy, ix]),
            h_min=float(self.h_min[iy, ix]),
            n_z=float(self.n_z[iy, ix]),
            r_step=float(self.r_step[iy, ix]),
        )

    def observable(self) -> boolarr:
        """
        Cells whose center lies within the largest observed range of
        the sensor column it projects into. Every cell is observable
        when the grid carries no bound.

        """
        shape = self.spec.shape
        if (
            self.column_bound is None
            or self.sensor_position is None
            or self.sensor_rotation is None
            or self.intrinsics is None
        ):
            return np.ones(shape, dtype=bool)
        intr = self.intrinsics
        grid_x, grid_y = self.spec.cell_centers()
        offset = np.stack(
            (
                grid_x - self.sensor_position[0],
                grid_y - self.sensor_position[1],
                np.zeros(shape),
            ),
            axis=-1,
        )
        local = offset @ self.sensor_rotation
        if intr.full_azimuth:
            azimuth = np.arctan2(local[..., 1], local[..., 0])
            in_view = np.ones(shape, dtype=bool)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                azimuth = np.arctan(local[..., 1] / local[..., 0])
            in_view = local[..., 0] > 0.00
        span = intr.fov_left + intr.fov_right
        u_f = intr.width * (1.00 - (azimuth + intr.fov_right) / span)
        u_f = np.where(in_view, u_f, -1.00)
        in_view &= (u_f >= -0.5) & (u_f <= intr.width + 0.5)
        column = np.clip(
            np.floor(np.where(in_view, u_f, 0.00)), 0, intr.width - 1
        )
        bound = self.column_bound[column.astype(np.int64)]
        distance = np.hypot(offset[..., 0], offset[..., 1])
        return in_view & (distance <= bound)


def reproject(
    smap: SurfelMap,
    risk: RiskImage,
    pose: Pose,
    spec: GridSpec,
    h_p: float = 1.00,
) -> SparseElevationGrid:
    """
    Bins world-frame surfels into the grid, bottom-up per cell.

    Within a cell, surfels are taken in ascending world z (ties by
    pixel index). A surfel is accepted while its height exceeds the
    running maximum by no more than `h_p`; the first gap larger than
    that rejects it and everything above it. Accepted surfels give
    `h_max = max z`, `h_min = min z`, `n_z = mean |n_z|` and
    `r_step = max risk`.

    Only surfels with a valid normal and a valid pooled risk take part.

    """
    if not h_p > 0.00:
        raise ValueError(f"h_p must be positive, got {h_p}")
    if (
        risk.valid.shape != smap.valid.shape
        or risk.intrinsics.width != smap.intrinsics.width
        or risk.intrinsics.height != smap.intrinsics.height
    ):
        raise ValueError("Risk image and surfel map do not share intrinsics")

    grid = SparseElevationGrid.empty(spec)
    grid.column_bound = smap.max_range_per_column.copy()
    grid.sensor_position = pose.translation.copy()
    grid.sensor_rotation = pose.rotation.copy()
    grid.intrinsics = smap.intrinsics

    use = smap.valid & risk.valid
    pixel = np.flatnonzero(use)
    if pixel.size == 0:
        return grid
    points = pose.apply(smap.points.reshape(-1, 3)[pixel])
    normals = pose.rotate(smap.normals.reshape(-1, 3)[pixel])
    n_z = np.clip(np.abs(normals[:, 2]), 0.00, 1.00)
    r_step = risk.values.reshape(-1)[pixel]

    iy, ix, inside = spec.locate(points[:, 0], points[:, 1])
    grid.dropped = int((~inside).sum())
    n_x = spec.shape[1]
    cell = (iy * n_x + ix)[inside]
    z_val = points[inside, 2]
    n_z = n_z[inside]
    r_step = r_step[inside]
    pixel = pixel[inside]
    if cell.size == 0:
        return grid

    order = np.lexsort((pixel, z_val, cell))
    cell, z_val = cell[order], z_val[order]
    n_z, r_step = n_z[order], r_step[order]
    starts = np.ones(cell.size, dtype=bool)
    starts[1:] = cell[1:] != cell[:-1]
    gaps = np.zeros(cell.size, dtype=bool)
    gaps[1:] = (z_val[1:] - z_val[:-1]) > h_p
    gaps &= ~starts
    broken = np.cumsum(gaps)
    start_idx = np.maximum.accumulate(
        np.where(starts, np.arange(cell.size), 0)
    )
    accepted = broken == broken[start_idx]
    grid.overhangs = int((~accepted).sum())

    cell, z_val, n_z, r_step = (
        cell[accepted],
        z_val[accepted],
        n_z[accepted],
        r_step[accepted],
    )
    size = spec.shape[0] * n_x
    h_max = np.full(size, -np.inf)
    h_min = np.full(size, np.inf)
    nz_sum = np.zeros(size)
    count = np.zeros(size)
    risk_max = np.full(size, -np.inf)
    np.maximum.at(h_max, cell, z_val)
    np.minimum.at(h_min, cell, z_val)
    np.add.at(nz_sum, cell, n_z)
    np.add.at(count, cell, 1.00)
    np.maximum.at(risk_max, cell, r_step)

    seen = count > 0
    shape = spec.shape
    grid.observed = seen.reshape(shape)
    grid.h_max = np.where(seen, h_max, np.nan).reshape(shape)
    grid.h_min = np.where(seen, h_min, np.nan).reshape(shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_nz = np.clip(nz_sum / count, 0.00, 1.00)
    grid.n_z = np.where(seen, mean_nz, np.nan).reshape(shape)
    grid.r_step = np.where(seen, risk_max, np.nan).reshape(shape)
    return grid
