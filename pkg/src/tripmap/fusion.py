"""
Recursive fusion of local terrain maps into the static terrain map.

Each local cell is first compared against the fused state with a
Mahalanobis test on (verticality, steppability). Accepted measurements
update every Gaussian layer with a scalar Kalman filter whose noise
comes from the bias models; the collision layer accumulates log-odds.

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
from typing import Union
from dataclasses import dataclass, field, replace
import logging
import numpy as np
import numpy.typing as npt
from scipy.special import expit, logit
from . import common
from .completion import LocalTerrainMap
from .config import PipelineConfig
from .grid import GridSpec
from .obj_collections import TileCollection

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]
intarr = npt.NDArray[np.int64]
scalar_or_arr = Union[float, nparr]

logger = logging.getLogger(__name__)


@dataclass(repr=False)
class FusionSettings:
    """
    Parameters of the fusion stage.

    Attributes:
        tau_m: Gate threshold on the Mahalanobis quadratic form.
          `inf` accepts everything.
        process_var: Variance added to every layer before each update.
        scale_h: Vertical bias to noise std multiplier.
        scale_o: Horizontal bias to noise std multiplier.
        sigma_min: Floor of the noise std.
        eps: Clamp of collision risks before the logit.
        var_init: Minimum variance of a newly seeded cell.
        max_rejections: Consecutive rejections after which a cell takes
          the next measurement whatever its distance. None never lapses
          the gate.

    """

    tau_m: float = field(default=3.00)
    process_var: float = field(default=1.0e-4)
    scale_h: float = field(default=1.00)
    scale_o: float = field(default=1.00)
    sigma_min: float = field(default=0.01)
    eps: float = field(default=0.01)
    var_init: float = field(default=0.04)
    max_rejections: Optional[int] = field(default=10)

    @classmethod
    def from_config(cls, config: PipelineConfig) -> FusionSettings:
        """
        Extracts the fusion parameters of a pipeline configuration.

        """
        return cls(
            tau_m=config.tau_m,
            process_var=config.process_var,
            scale_h=config.scale_h,
            scale_o=config.scale_o,
            sigma_min=config.sigma_min,
            eps=config.eps,
            var_init=config.var_init,
            max_rejections=config.max_rejections,
        )


@dataclass(repr=False)
class Tile:
    """
    Square block of fused cells, allocated on demand.

    Attributes:
        uid: (tx, ty) tile index on the world lattice.
        size: Cells per edge.
        mean: Per-layer `(size, size)` means, rows are y.
        var: Per-layer variances.
        coll_logodds: Collision log-odds accumulators.
        update_count: Accepted measurements per cell (0 = never seen).
        rejections: Consecutive rejected measurements per cell, 0 when
          the last one was accepted.

    """

    uid: tuple[int, int]
    size: int
    mean: dict[str, nparr] = field(init=False)
    var: dict[str, nparr] = field(init=False)
    coll_logodds: nparr = field(init=False)
    update_count: npt.NDArray[np.int64] = field(init=False)
    rejections: npt.NDArray[np.int64] = field(init=False)

    def __post_init__(self):
        shape = (self.size, self.size)
        self.mean = {name: np.zeros(shape) for name in common.GAUSSIAN_LAYERS}
        self.var = {name: np.ones(shape) for name in common.GAUSSIAN_LAYERS}
        self.coll_logodds = np.zeros(shape)
        self.update_count = np.zeros(shape, dtype=np.int64)
        self.rejections = np.zeros(shape, dtype=np.int64)

    def __repr__(self):
        return (
            f"Tile(uid={self.uid}, size={self.size}, "
            f"cells={int((self.update_count > 0).sum())})"
        )


@dataclass(repr=False)
class FusedCell:
    """
    Read-only copy of one fused cell.

    Attributes:
        o: Cell center, world frame.
        h_max_hat, h_min_hat, n_z_hat, r_step_hat, r_incl_hat: Means.
        var_hmax, var_hmin, var_nz, var_rstep, var_rincl: Variances.
        coll_logodds: Collision log-odds.
        update_count: Accepted measurements.
        last_rejected: Whether the last measurement was rejected.
        rejections: Consecutive rejected measurements.

    """

    o: tuple[float, float]
    h_max_hat: float
    h_min_hat: float
    n_z_hat: float
    r_step_hat: float
    r_incl_hat: float
    var_hmax: float
    var_hmin: float
    var_nz: float
    var_rstep: float
    var_rincl: float
    coll_logodds: float = field(default=0.00)
    update_count: int = field(default=0)
    last_rejected: bool = field(default=False)
    rejections: int = field(default=0)

    def __repr__(self):
        return (
            f"FusedCell(o={self.o}, h_max={self.h_max_hat:.4f}, "
            f"h_min={self.h_min_hat:.4f}, n_z={self.n_z_hat:.4f}, "
            f"r_step={self.r_step_hat:.4f}, r_incl={self.r_incl_hat:.4f}, "
            f"r_coll={self.r_coll_hat:.4f}, updates={self.update_count})"
        )

    @property
    def r_coll_hat(self) -> float:
        """
        Collision risk realized from the log-odds.

        """
        return float(expit(self.coll_logodds))


def kalman_update(
    prior: tuple[scalar_or_arr, scalar_or_arr],
    meas: tuple[scalar_or_arr, scalar_or_arr],
    process_var: float = 0.00,
) -> tuple[scalar_or_arr, scalar_or_arr]:
    """
    Scalar Kalman filter step on (mean, variance) pairs. Works
    elementwise on arrays.

    Arguments:
        prior: (mean, variance) of the state.
        meas: (value, noise variance) of the measurement.
        process_var: Variance added in the prediction step.

    Example:
        >>> kalman_update((0.0, 1.0), (1.0, 1.0))
        (0.5, 0.5)
        >>> kalman_update((0.0, 1.0), (1.0, float('inf')))
        (0.0, 1.0)

    """
    mean, var = prior
    value, noise_var = meas
    var = var + process_var
    gain = var / (var + noise_var)
    mean = mean + gain * (value - mean)
    var = var * (1.00 - gain)
    if np.ndim(mean) == 0:
        return float(mean), float(var)
    return mean, var


def mahalanobis_quadratic(
    delta_nz: scalar_or_arr,
    delta_rstep: scalar_or_arr,
    var_nz: scalar_or_arr,
    var_rstep: scalar_or_arr,
) -> scalar_or_arr:
    """
    `delta^T diag(var_nz, var_rstep)^-1 delta`, elementwise.

    """
    return delta_nz * delta_nz / var_nz + delta_rstep * delta_rstep / var_rstep


def mahalanobis_distance(
    measured: tuple[float, float], prior: FusedCell
) -> float:
    """
    Quadratic-form Mahalanobis distance (no square root) between a
    measured (n_z, r_step) pair and a fused cell, using the diagonal of
    the cell's layer variances.

    Example:
        >>> cell = FusedCell((0.0, 0.0), 0.0, 0.0, 1.0, 0.0, 0.0,
        ...     1.0, 1.0, 1.0, 1.0, 1.0, update_count=1)
        >>> mahalanobis_distance((0.5, 0.5), cell)
        0.5
        >>> mahalanobis_distance((3.0, 0.0), cell)
        4.0

    """
    if prior.update_count < 1:
        raise ValueError("Mahalanobis distance needs an initialized cell")
    return float(
        mahalanobis_quadratic(
            measured[0] - prior.n_z_hat,
            measured[1] - prior.r_step_hat,
            prior.var_nz,
            prior.var_rstep,
        )
    )


def collision_logit(r_coll: scalar_or_arr, eps: float = 0.01) -> scalar_or_arr:
    """
    Log-odds increment of a collision risk clamped to [eps, 1 - eps].

    Example:
        >>> round(collision_logit(1.0), 3)
        4.595
        >>> collision_logit(0.5)
        0.0

    """
    val = logit(np.clip(r_coll, eps, 1.00 - eps))
    if np.ndim(val) == 0:
        return float(val)
    return val


def logit_update_collision(
    cell: FusedCell, r_coll_bar: float, eps: float = 0.01
) -> FusedCell:
    """
    Adds the log-odds of a collision risk to a fused cell.

    Example:
        >>> cell = FusedCell((0.0, 0.0), 0.0, 0.0, 1.0, 0.0, 0.0,
        ...     1.0, 1.0, 1.0, 1.0, 1.0)
        >>> cell = logit_update_collision(cell, 0.73)
        >>> cell = logit_update_collision(cell, 0.73)
        >>> round(cell.r_coll_hat, 3)
        0.88

    """
    if not 0.00 < eps < 0.50:
        raise ValueError(f"eps must lie in (0, 0.5), got {eps}")
    cell.coll_logodds += collision_logit(r_coll_bar, eps)
    return cell


@dataclass(repr=False)
class MapSnapshot:
    """
    Layers of the static map over a window.

    Attributes:
        spec: Window geometry.
        populated: Cells that hold fused values.
        layers: `h_max`, `h_min`, `n_z`, `r_step`, `r_incl` and `r_coll`
          arrays, NaN on unpopulated cells.

    """

    spec: GridSpec
    populated: boolarr
    layers: dict[str, nparr]

    def __repr__(self):
        res = ""
        res += "MapSnapshot object\n"
        res += f"shape: {self.spec.shape}\n"
        res += f"populated cells: {int(self.populated.sum())}\n"
        return res

    def layer(self, name: str) -> nparr:
        """
        One layer by name.

        """
        if name not in self.layers:
            raise KeyError(
                f"Unknown layer: {name}. Available: {list(self.layers)}"
            )
        return self.layers[name]


@dataclass(repr=False)
class StaticTerrainMap:
    """
    World-anchored fused terrain map stored as square tiles.

    Cell (gx, gy) covers `[lattice_origin + (gx, gy) * resolution,
    lattice_origin + (gx + 1, gy + 1) * resolution)` and lives in tile
    `(gx // tile_size, gy // tile_size)`, so every world cell maps to
    exactly one tile slot.

    Attributes:
        resolution: Cell size (m).
        lattice_origin: World (x, y) of the corner of cell (0, 0).
        tile_size: Cells per tile edge.
        settings: Fusion parameters.
        tiles: Allocated tiles.

    Example:
        >>> smap = StaticTerrainMap(0.1)
        >>> len(smap)
        0
        >>> smap.cell(3, 4) is None
        True

    """

    resolution: float
    lattice_origin: tuple[float, float] = field(default=(0.00, 0.00))
    tile_size: int = field(default=64)
    settings: FusionSettings = field(default_factory=FusionSettings)
    tiles: TileCollection[Tile] = field(init=False)

    def __post_init__(self):
        if not self.resolution > 0.00:
            raise ValueError("Resolution must be positive")
        self.lattice_origin = (
            float(self.lattice_origin[0]),
            float(self.lattice_origin[1]),
        )
        size = self.tile_size
        self.tiles = TileCollection(
            parent=self, factory=lambda uid: Tile(uid, size)
        )

    def __repr__(self):
        res = ""
        res += "StaticTerrainMap object\n"
        res += f"resolution: {self.resolution}\n"
        res += f"lattice origin: {self.lattice_origin}\n"
        res += f"tiles: {self.tiles.__srepr__()}\n"
        res += f"populated cells: {len(self)}\n"
        return res

    def __len__(self):
        return int(
            sum((tile.update_count > 0).sum() for tile in self.tiles.values())
        )

    def _check_window(self, spec: GridSpec) -> tuple[int, int]:
        if abs(spec.resolution - self.resolution) > common.TINY:
            raise ValueError(
                f"Grid resolution {spec.resolution} does not match the "
                f"map resolution {self.resolution}"
            )
        return spec.lattice_offset(self.lattice_origin)

    def _split(
        self, g_x: npt.NDArray[np.int64], g_y: npt.NDArray[np.int64]
    ) -> dict[tuple[int, int], npt.NDArray[np.int64]]:
        """
        Groups global cell indices by tile. Returns, per tile uid, the
        positions into `g_x` / `g_y` that fall in it.

        """
        size = self.tile_size
        t_x = np.floor_divide(g_x, size)
        t_y = np.floor_divide(g_y, size)
        groups: dict[tuple[int, int], npt.NDArray[np.int64]] = {}
        if g_x.size == 0:
            return groups
        keys = np.stack((t_y, t_x), axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
        for k, (u_y, u_x) in enumerate(uniq):
            groups[(int(u_x), int(u_y))] = order[bounds[k] : bounds[k + 1]]
        return groups

    def cell(self, g_x: int, g_y: int) -> Optional[FusedCell]:
        """
        The fused cell at global index (gx, gy), or None.

        """
        size = self.tile_size
        uid = (g_x // size, g_y // size)
        if uid not in self.tiles:
            return None
        tile = self.tiles[uid]
        i_x, i_y = g_x % size, g_y % size
        if tile.update_count[i_y, i_x] == 0:
            return None
        res = self.resolution
        return FusedCell(
            o=(
                self.lattice_origin[0] + (g_x + 0.5) * res,
                self.lattice_origin[1] + (g_y + 0.5) * res,
            ),
            h_max_hat=float(tile.mean["h_max"][i_y, i_x]),
            h_min_hat=float(tile.mean["h_min"][i_y, i_x]),
            n_z_hat=float(tile.mean["n_z"][i_y, i_x]),
            r_step_hat=float(tile.mean["r_step"][i_y, i_x]),
            r_incl_hat=float(tile.mean["r_incl"][i_y, i_x]),
            var_hmax=float(tile.var["h_max"][i_y, i_x]),
            var_hmin=float(tile.var["h_min"][i_y, i_x]),
            var_nz=float(tile.var["n_z"][i_y, i_x]),
            var_rstep=float(tile.var["r_step"][i_y, i_x]),
            var_rincl=float(tile.var["r_incl"][i_y, i_x]),
            coll_logodds=float(tile.coll_logodds[i_y, i_x]),
            update_count=int(tile.update_count[i_y, i_x]),
            last_rejected=bool(tile.rejections[i_y, i_x] > 0),
            rejections=int(tile.rejections[i_y, i_x]),
        )

    def cell_at(self, x: float, y: float) -> Optional[FusedCell]:
        """
        The fused cell containing the world point (x, y), or None.

        """
        g_x = int(np.floor((x - self.lattice_origin[0]) / self.resolution))
        g_y = int(np.floor((y - self.lattice_origin[1]) / self.resolution))
        return self.cell(g_x, g_y)

    def populated_window(self) -> Optional[GridSpec]:
        """
        Smallest lattice-aligned window holding every populated cell,
        or None for an empty map.

        """
        g_x, g_y = self.populated_indices()
        if g_x.size == 0:
            return None
        res = self.resolution
        lo_x, lo_y = int(g_x.min()), int(g_y.min())
        n_x = int(g_x.max()) - lo_x + 1
        n_y = int(g_y.max()) - lo_y + 1
        return GridSpec(
            res,
            (n_x * res, n_y * res),
            (
                self.lattice_origin[0] + lo_x * res,
                self.lattice_origin[1] + lo_y * res,
            ),
        )

    def populated_indices(self) -> tuple[intarr, intarr]:
        """
        Global (gx, gy) of every populated cell, sorted by (gy, gx).

        """
        size = self.tile_size
        all_x, all_y = [], []
        for uid in self.tiles.sorted_uids():
            tile = self.tiles[uid]
            i_y, i_x = np.nonzero(tile.update_count > 0)
            all_x.append(uid[0] * size + i_x)
            all_y.append(uid[1] * size + i_y)
        if not all_x:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        g_x = np.concatenate(all_x).astype(np.int64)
        g_y = np.concatenate(all_y).astype(np.int64)
        order = np.lexsort((g_x, g_y))
        return g_x[order], g_y[order]

    def gather(
        self, g_x: npt.NDArray[np.int64], g_y: npt.NDArray[np.int64]
    ) -> dict[str, npt.NDArray]:
        """
        Raw state of the given cells: `mean_<layer>`, `var_<layer>`,
        `coll_logodds`, `update_count` and `rejections` arrays.
        Cells in unallocated tiles read as never updated.

        """
        num = g_x.size
        out: dict[str, npt.NDArray] = {}
        for name in common.GAUSSIAN_LAYERS:
            out[f"mean_{name}"] = np.zeros(num)
            out[f"var_{name}"] = np.ones(num)
        out["coll_logodds"] = np.zeros(num)
        out["update_count"] = np.zeros(num, dtype=np.int64)
        out["rejections"] = np.zeros(num, dtype=np.int64)
        size = self.tile_size
        for uid, pos in self._split(g_x, g_y).items():
            if uid not in self.tiles:
                continue
            tile = self.tiles[uid]
            i_x = g_x[pos] - uid[0] * size
            i_y = g_y[pos] - uid[1] * size
            for name in common.GAUSSIAN_LAYERS:
                out[f"mean_{name}"][pos] = tile.mean[name][i_y, i_x]
                out[f"var_{name}"][pos] = tile.var[name][i_y, i_x]
            out["coll_logodds"][pos] = tile.coll_logodds[i_y, i_x]
            out["update_count"][pos] = tile.update_count[i_y, i_x]
            out["rejections"][pos] = tile.rejections[i_y, i_x]
        return out

    def scatter(
        self,
        g_x: npt.NDArray[np.int64],
        g_y: npt.NDArray[np.int64],
        state: dict[str, npt.NDArray],
    ) -> None:
        """
        Writes raw cell state in the layout returned by `gather`,
        allocating tiles as needed.

        """
        size = self.tile_size
        for uid, pos in self._split(g_x, g_y).items():
            tile = self.tiles.retrieve_or_create(uid)
            i_x = g_x[pos] - uid[0] * size
            i_y = g_y[pos] - uid[1] * size
            for name in common.GAUSSIAN_LAYERS:
                tile.mean[name][i_y, i_x] = state[f"mean_{name}"][pos]
                tile.var[name][i_y, i_x] = state[f"var_{name}"][pos]
            tile.coll_logodds[i_y, i_x] = state["coll_logodds"][pos]
            tile.update_count[i_y, i_x] = state["update_count"][pos]
            tile.rejections[i_y, i_x] = state["rejections"][pos]


def _fuse_cells(
    state: dict[str, npt.NDArray],
    meas: dict[str, nparr],
    settings: FusionSettings,
) -> boolarr:
    """
    Updates gathered cell state in place with one measurement per
    cell. Returns the rejection flags.

    A cell rejected `max_rejections` times in a row takes its next
    measurement ungated, through the regular Kalman update.

    """
    noise_h = np.maximum(
        (settings.scale_h * meas["sigma_h"]) ** 2, settings.sigma_min**2
    )
    noise_o = np.maximum(
        (settings.scale_o * meas["sigma_o"]) ** 2, settings.sigma_min**2
    )
    noise = {
        "h_max": noise_h,
        "h_min": noise_h,
        "n_z": noise_o,
        "r_step": noise_o,
        "r_incl": noise_o,
    }
    fresh = state["update_count"] == 0
    with np.errstate(invalid="ignore"):
        distance = mahalanobis_quadratic(
            meas["n_z"] - state["mean_n_z"],
            meas["r_step"] - state["mean_r_step"],
            state["var_n_z"],
            state["var_r_step"],
        )
    passed = distance < settings.tau_m
    if settings.max_rejections is not None:
        passed |= state["rejections"] >= settings.max_rejections
    accepted = ~fresh & passed
    rejected = ~fresh & ~accepted

    for name in common.GAUSSIAN_LAYERS:
        mean, var = kalman_update(
            (state[f"mean_{name}"], state[f"var_{name}"]),
            (meas[name], noise[name]),
            settings.process_var,
        )
        state[f"mean_{name}"] = np.where(
            fresh, meas[name], np.where(accepted, mean, state[f"mean_{name}"])
        )
        state[f"var_{name}"] = np.where(
            fresh,
            np.maximum(noise[name], settings.var_init),
            np.where(accepted, var, state[f"var_{name}"]),
        )
    changed = fresh | accepted
    for name in ("n_z", "r_step", "r_incl"):
        state[f"mean_{name}"] = np.where(
            changed,
            np.clip(state[f"mean_{name}"], 0.00, 1.00),
            state[f"mean_{name}"],
        )
    # h_min and h_max trade places together with their variances
    swap = changed & (state["mean_h_min"] > state["mean_h_max"])
    for kind in ("mean", "var"):
        low, high = state[f"{kind}_h_min"], state[f"{kind}_h_max"]
        state[f"{kind}_h_min"] = np.where(swap, high, low)
        state[f"{kind}_h_max"] = np.where(swap, low, high)

    increment = collision_logit(meas["r_coll"], settings.eps)
    state["coll_logodds"] = np.where(
        fresh,
        increment,
        np.where(
            accepted,
            state["coll_logodds"] + increment,
            state["coll_logodds"],
        ),
    )
    state["update_count"] = state["update_count"] + changed
    state["rejections"] = np.where(rejected, state["rejections"] + 1, 0)
    return rejected


def gate_and_update(
    local: LocalTerrainMap,
    static_map: StaticTerrainMap,
    tau_m: Optional[float] = None,
) -> boolarr:
    """
    Fuses a local terrain map into the static map, in place.

    New cells are seeded from the measurement. Known cells are updated
    only when the Mahalanobis quadratic form of their (n_z, r_step)
    innovation is below `tau_m`; otherwise they are left unchanged and
    flagged as rejected. After `max_rejections` rejections in a row a
    cell accepts its next measurement, so a cell first seen with a
    transient object on it is not locked out of the static map.

    Arguments:
        local: Completed local map, on the static map's lattice.
        static_map: Map to update.
        tau_m: Gate threshold; the map settings' threshold if None.

    Returns:
        Rejection mask with the shape of the local grid.

    Raises:
        ValueError: If the local grid is not on the map lattice.

    """
    off_x, off_y = static_map._check_window(local.spec)
    settings = static_map.settings
    if tau_m is not None:
        settings = replace(settings, tau_m=tau_m)
    mask = np.zeros(local.spec.shape, dtype=bool)
    i_y, i_x = np.nonzero(local.populated)
    if i_y.size == 0:
        return mask
    g_x = (i_x + off_x).astype(np.int64)
    g_y = (i_y + off_y).astype(np.int64)
    meas = {
        name: getattr(local, name)[i_y, i_x]
        for name in common.LAYERS + ("sigma_o", "sigma_h")
    }
    state = static_map.gather(g_x, g_y)
    rejected = _fuse_cells(state, meas, settings)
    static_map.scatter(g_x, g_y, state)
    mask[i_y[rejected], i_x[rejected]] = True
    logger.debug(
        "fused %d cells, %d rejected, %d tiles",
        i_y.size,
        int(rejected.sum()),
        len(static_map.tiles),
    )
    return mask


def snapshot(
    static_map: StaticTerrainMap, window: Optional[GridSpec] = None
) -> MapSnapshot:
    """
    Reads the six terrain layers of the static map over a window, with
    the collision layer realized from its log-odds. The default window
    covers every populated cell.

    """
    if window is None:
        window = static_map.populated_window()
        if window is None:
            res = static_map.resolution
            window = GridSpec(res, (res, res), static_map.lattice_origin)
    off_x, off_y = static_map._check_window(window)
    n_y, n_x = window.shape
    i_y, i_x = np.mgrid[0:n_y, 0:n_x]
    g_x = (i_x.reshape(-1) + off_x).astype(np.int64)
    g_y = (i_y.reshape(-1) + off_y).astype(np.int64)
    state = static_map.gather(g_x, g_y)
    populated = (state["update_count"] > 0).reshape(n_y, n_x)
    layers = {}
    for name in common.GAUSSIAN_LAYERS:
        layers[name] = np.where(
            populated, state[f"mean_{name}"].reshape(n_y, n_x), np.nan
        )
    layers["r_coll"] = np.where(
        populated, expit(state["coll_logodds"]).reshape(n_y, n_x), np.nan
    )
    return MapSnapshot(window, populated, layers)
