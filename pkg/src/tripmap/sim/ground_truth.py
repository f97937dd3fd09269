"""
Ground-truth traversability grids from static scene geometry.

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
from dataclasses import dataclass
import numpy as np
import numpy.typing as npt
from ..grid import GridSpec
from ..grid import shifted
from .scene import Scene

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]

NEIGHBORS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
NEIGHBORS_8 = NEIGHBORS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))

# relative inset of the outermost subsamples from the cell edges
SAMPLE_INSET = 1.0e-6


@dataclass(repr=False)
class GroundTruthGrid:
    """
    Reference labels of a static scene.

    Cells with no geometry at all have `defined` False, a NaN height,
    and are neither collision nor traversable.

    Attributes:
        spec: Grid geometry.
        h_max_gt: Highest static surface in each cell.
        collision_gt: Cells next to a height step above `tau_h`.
        traversable_gt: Defined cells that are not collision.
        defined: Cells holding geometry.

    """

    spec: GridSpec
    h_max_gt: nparr
    collision_gt: boolarr
    traversable_gt: boolarr
    defined: boolarr

    def __repr__(self):
        res = ""
        res += "GroundTruthGrid object\n"
        res += f"shape: {self.spec.shape}\n"
        res += f"collision cells: {int(self.collision_gt.sum())}\n"
        res += f"traversable cells: {int(self.traversable_gt.sum())}\n"
        return res


def sample_heights(scene: Scene, spec: GridSpec, subsamples: int = 4) -> nparr:
    """
    Highest static surface per cell, taken over a regular
    `subsamples x subsamples` pattern that spans each cell up to a hair
    inside its edges. Planar tops reach their cell maximum on the
    pattern whatever the subsample count.

    """
    if subsamples < 2:
        raise ValueError(f"subsamples must be at least 2, got {subsamples}")
    n_y, n_x = spec.shape
    frac = np.linspace(SAMPLE_INSET, 1.00 - SAMPLE_INSET, subsamples)
    steps_x = (np.arange(n_x)[:, None] + frac[None, :]).reshape(-1)
    steps_y = (np.arange(n_y)[:, None] + frac[None, :]).reshape(-1)
    sub_x = spec.origin[0] + steps_x * spec.resolution
    sub_y = spec.origin[1] + steps_y * spec.resolution
    grid_y, grid_x = np.meshgrid(sub_y, sub_x, indexing="ij")
    top = np.full(grid_x.shape, -np.inf)
    for poly in scene.static_polytopes():
        hgt = poly.top_height(grid_x, grid_y)
        top = np.where(np.isnan(hgt), top, np.maximum(top, hgt))
    top = top.reshape(n_y, subsamples, n_x, subsamples).max(axis=(1, 3))
    return np.where(np.isfinite(top), top, np.nan)


def ground_truth(
    scene: Scene,
    spec: GridSpec,
    tau_h: float = 0.25,
    adjacency: int = 8,
    subsamples: int = 4,
) -> GroundTruthGrid:
    """
    Labels every cell of `spec` from the static geometry.

    A cell is collision when its height differs from that of any
    defined neighbor by more than `tau_h`. Dynamic actors are ignored.

    Example:
        >>> from .scene import Plane
        >>> scene = Scene(static=[Plane(0.0, (-2.0, -2.0, 2.0, 2.0))])
        >>> spec = GridSpec(0.5, (2.0, 2.0), origin=(-1.0, -1.0))
        >>> gt = ground_truth(scene, spec)
        >>> int(gt.collision_gt.sum()), int(gt.traversable_gt.sum())
        (0, 16)

    """
    if adjacency not in (4, 8):
        raise ValueError(f"adjacency must be 4 or 8, got {adjacency}")
    if not tau_h > 0.00:
        raise ValueError(f"tau_h must be positive, got {tau_h}")
    heights = sample_heights(scene, spec, subsamples)
    defined = np.isfinite(heights)
    collision = np.zeros(spec.shape, dtype=bool)
    for d_y, d_x in NEIGHBORS_8 if adjacency == 8 else NEIGHBORS_4:
        other = shifted(heights, d_y, d_x, np.nan)
        with np.errstate(invalid="ignore"):
            collision |= np.abs(heights - other) > tau_h
    collision &= defined
    return GroundTruthGrid(
        spec=spec,
        h_max_gt=heights,
        collision_gt=collision,
        traversable_gt=defined & ~collision,
        defined=defined,
    )


def save_ground_truth(gt: GroundTruthGrid, path: str) -> None:
    """
    Writes a ground-truth grid as a numpy `.npz` archive.

    """
    with open(path, "wb") as file:
        np.savez(
            file,
            resolution=np.float64(gt.spec.resolution),
            extent=np.array(gt.spec.extent, dtype=np.float64),
            origin=np.array(gt.spec.origin, dtype=np.float64),
            h_max_gt=gt.h_max_gt,
            collision_gt=gt.collision_gt,
            defined=gt.defined,
        )


def load_ground_truth(path: str) -> GroundTruthGrid:
    """
    Reads a ground-truth grid written by `save_ground_truth`.

    """
    with np.load(path) as data:
        try:
            spec = GridSpec(
                float(data["resolution"]),
                tuple(data["extent"]),
                tuple(data["origin"]),
            )
            heights = np.asarray(data["h_max_gt"], dtype=np.float64)
            collision = np.asarray(data["collision_gt"], dtype=bool)
            defined = np.asarray(data["defined"], dtype=bool)
        except KeyError as exc:
            raise ValueError(
                f"{path}: missing ground-truth array {exc}"
            ) from exc
    if heights.shape != spec.shape or collision.shape != spec.shape:
        raise ValueError(
            f"{path}: array shape does not match the grid {spec.shape}"
        )
    return GroundTruthGrid(
        spec=spec,
        h_max_gt=heights,
        collision_gt=collision,
        traversable_gt=defined & ~collision,
        defined=defined,
    )


def scene_grid(scene: Scene, resolution: float) -> GridSpec:
    """
    Smallest grid on the lattice through (0, 0) covering the scene
    bounds.

    Example:
        >>> scene = Scene(bounds=((-1.05, -0.5, -1.0), (1.0, 0.5, 1.0)))
        >>> scene_grid(scene, 0.1).shape
        (10, 21)

    """
    low, high = scene.bounds
    lo_x = int(np.floor(low[0] / resolution + 1.0e-9))
    lo_y = int(np.floor(low[1] / resolution + 1.0e-9))
    hi_x = int(np.ceil(high[0] / resolution - 1.0e-9))
    hi_y = int(np.ceil(high[1] / resolution - 1.0e-9))
    return GridSpec(
        resolution,
        ((hi_x - lo_x) * resolution, (hi_y - lo_y) * resolution),
        (lo_x * resolution, lo_y * resolution),
    )
