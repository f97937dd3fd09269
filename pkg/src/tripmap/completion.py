"""
Completion of the sparse grid into a local terrain map.

Heights of unobserved cells are inferred with a compact-support kernel
whose weights are scaled by neighbor steppability, so walls and edges do
not leak into the terrain they border. Steppability itself is inferred
with the plain kernel. Every non-empty cell then receives inclination
and collision risks, a verticality and two bias measures that the
fusion stage uses as measurement noise.

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
from dataclasses import dataclass
import numpy as np
import numpy.typing as npt
from . import common
from .grid import GridSpec
from .grid import disk_offsets
from .reprojection import SparseElevationGrid

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]

# provenance codes
EMPTY = 0
OBSERVED = 1
INFERRED = 2
PROVENANCE_NAMES = {EMPTY: "empty", OBSERVED: "observed", INFERRED: "inferred"}


def bgk_kernel(d: Union[float, nparr], l: float) -> Union[float, nparr]:
    """
    Sparse kernel weight at distance `d` for radius `l`.

    Example:
        >>> bgk_kernel(0.0, 1.0)
        1.0
        >>> bgk_kernel(1.0, 1.0)
        0.0
        >>> round(bgk_kernel(0.5, 1.0), 12)
        0.166666666667

    """
    if not l > 0.00:
        raise ValueError(f"Kernel radius must be positive, got {l}")
    ratio = np.asarray(d, dtype=np.float64) / l
    angle = 2.00 * np.pi * ratio
    val = (2.00 + np.cos(angle)) / 3.00 * (1.00 - ratio) + np.sin(angle) / (
        2.00 * np.pi
    )
    val = np.where(ratio < 1.00, np.clip(val, 0.00, 1.00), 0.00)
    if val.ndim == 0:
        return float(val)
    return val


def tbgk_kernel(
    d: Union[float, nparr], l: float, r_step_neighbor: Union[float, nparr]
) -> Union[float, nparr]:
    """
    Steppability-aware kernel weight, `(1 - r_step) * bgk_kernel(d, l)`.

    Example:
        >>> tbgk_kernel(0.3, 1.0, 1.0)
        0.0
        >>> tbgk_kernel(0.0, 1.0, 0.5)
        0.5

    """
    r_n = np.asarray(r_step_neighbor, dtype=np.float64)
    val = (1.00 - r_n) * bgk_kernel(d, l)
    if np.ndim(val) == 0:
        return float(val)
    return val


@dataclass(repr=False)
class LocalCell:
    """
    One cell of the local terrain map.

    Attributes:
        o: Cell center, world frame.
        h_max_bar, h_min_bar: Heights.
        n_z_bar: Verticality.
        r_step_bar, r_incl_bar, r_coll_bar: Risks.
        sigma_o: Horizontal bias.
        sigma_h: Vertical bias.
        provenance: `observed` or `inferred`.

    """

    o: tuple[float, float]
    h_max_bar: float
    h_min_bar: float
    n_z_bar: float
    r_step_bar: float
    r_incl_bar: float
    r_coll_bar: float
    sigma_o: float
    sigma_h: float
    provenance: str

    def __repr__(self):
        return (
            f"LocalCell(o={self.o}, h_max={self.h_max_bar:.4f}, "
            f"h_min={self.h_min_bar:.4f}, n_z={self.n_z_bar:.4f}, "
            f"r_step={self.r_step_bar:.4f}, r_incl={self.r_incl_bar:.4f}, "
            f"r_coll={self.r_coll_bar:.4f}, sigma_o={self.sigma_o:.4f}, "
            f"sigma_h={self.sigma_h:.4f}, {self.provenance})"
        )


@dataclass(repr=False)
class LocalTerrainMap:
    """
    Completed local grid. Layers are `(ny, nx)` arrays with NaN on
    empty cells.

    Attributes:
        spec: Grid geometry, shared with the sparse grid.
        provenance: `EMPTY`, `OBSERVED` or `INFERRED` per cell.
        h_max, h_min, n_z, r_step, r_incl, r_coll: Terrain layers.
        sigma_o, sigma_h: Bias layers.

    """

    spec: GridSpec
    provenance: npt.NDArray[np.int8]
    h_max: nparr
    h_min: nparr
    n_z: nparr
    r_step: nparr
    r_incl: nparr
    r_coll: nparr
    sigma_o: nparr
    sigma_h: nparr

    def __repr__(self):
        res = ""
        res += "LocalTerrainMap object\n"
        res += f"shape: {self.spec.shape}\n"
        res += f"observed cells: {int((self.provenance == OBSERVED).sum())}\n"
        res += f"inferred cells: {int((self.provenance == INFERRED).sum())}\n"
        return res

    @classmethod
    def empty(cls, spec: GridSpec) -> LocalTerrainMap:
        """
        A local map with no populated cell.

        """
        shape = spec.shape

        def nans():
            return np.full(shape, np.nan)

        return cls(
            spec,
            np.zeros(shape, dtype=np.int8),
            nans(),
            nans(),
            nans(),
            nans(),
            nans(),
            nans(),
            nans(),
            nans(),
        )

    @property
    def populated(self) -> boolarr:
        """
        Non-empty cells.

        """
        return self.provenance != EMPTY

    def cell(self, iy: int, ix: int) -> Optional[LocalCell]:
        """
        The cell at (iy, ix), or None when empty.

        """
        prov = int(self.provenance[iy, ix])
        if prov == EMPTY:
            return None
        return LocalCell(
            o=self.spec.cell_center(iy, ix),
            h_max_bar=float(self.h_max[iy, ix]),
            h_min_bar=float(self.h_min[iy, ix]),
            n_z_bar=float(self.n_z[iy, ix]),
            r_step_bar=float(self.r_step[iy, ix]),
            r_incl_bar=float(self.r_incl[iy, ix]),
            r_coll_bar=float(self.r_coll[iy, ix]),
            sigma_o=float(self.sigma_o[iy, ix]),
            sigma_h=float(self.sigma_h[iy, ix]),
            provenance=PROVENANCE_NAMES[prov],
        )


def _in_grid(spec: GridSpec, iy: int, ix: int) -> bool:
    n_y, n_x = spec.shape
    return 0 <= iy < n_y and 0 <= ix < n_x


def infer_cell(
    target: tuple[int, int],
    grid: SparseElevationGrid,
    l: float,
    use_tbgk: bool = True,
    sigma_min: float = 0.01,
) -> Optional[tuple[float, float, float, float, float]]:
    """
    Kernel inference at a single cell, by direct summation.

    Heights are weighted means with steppability-aware weights (plain
    weights when `use_tbgk` is False); the steppability risk is a
    plain-kernel weighted mean. Observed cells keep their own values
    and only receive biases, floored at `sigma_min`; an observed cell
    whose steppability-aware weights all vanish takes its biases from
    the plain weights.

    Arguments:
        target: (iy, ix) of the cell.
        grid: Sparse observed grid.
        l: Kernel radius.
        use_tbgk: Weight heights by neighbor steppability.
        sigma_min: Floor of the biases of observed cells.

    Returns:
        `(h_max_bar, h_min_bar, r_step_bar, sigma_o, sigma_h)`, or None
        when no neighbor carries weight.

    Example:
        >>> from tripmap.grid import GridSpec
        >>> grid = SparseElevationGrid.empty(GridSpec(0.1, (0.5, 0.1)))
        >>> grid.set_cell(0, 1, h_max=1.0, h_min=1.0, n_z=1.0, r_step=0.0)
        >>> grid.set_cell(0, 3, h_max=0.0, h_min=0.0, n_z=0.0, r_step=1.0)
        >>> h_max, h_min, r_step, sigma_o, sigma_h = infer_cell(
        ...     (0, 2), grid, 0.2)
        >>> (h_max, round(r_step, 12), round(sigma_o, 12), sigma_h)
        (1.0, 0.5, 0.5, 0.0)

    """
    spec = grid.spec
    res = spec.resolution
    iy, ix = target
    observed = bool(grid.observed[iy, ix])
    members = []
    for d_y, d_x, dist in disk_offsets(l, res):
        n_y, n_x = iy + d_y, ix + d_x
        if not _in_grid(spec, n_y, n_x) or not grid.observed[n_y, n_x]:
            continue
        k = float(bgk_kernel(dist, l))
        r_n = float(grid.r_step[n_y, n_x])
        members.append(
            (
                k,
                (1.00 - r_n) * k,
                d_x * res,
                d_y * res,
                float(grid.h_max[n_y, n_x]),
                float(grid.h_min[n_y, n_x]),
                r_n,
            )
        )
    plain_sum = sum(mem[0] for mem in members)
    aware_sum = sum(mem[1] for mem in members)
    col = 1 if use_tbgk else 0
    if observed and aware_sum <= 0.00:
        col = 0
    w_sum = plain_sum if col == 0 else aware_sum
    if w_sum <= 0.00:
        return None
    if observed:
        h_max = float(grid.h_max[iy, ix])
        h_min = float(grid.h_min[iy, ix])
        r_step = float(grid.r_step[iy, ix])
    else:
        h_max = sum(mem[col] * mem[4] for mem in members) / w_sum
        h_min = sum(mem[col] * mem[5] for mem in members) / w_sum
        r_step = sum(mem[0] * mem[6] for mem in members) / plain_sum
    off_x = sum(mem[col] * mem[2] for mem in members)
    off_y = sum(mem[col] * mem[3] for mem in members)
    sigma_o = min(float(np.hypot(off_x, off_y)) / (l * w_sum), 1.00)
    sigma_h = min(
        sum(mem[col] * abs(mem[4] - h_max) for mem in members) / w_sum, 1.00
    )
    if observed:
        sigma_o = max(sigma_o, sigma_min)
        sigma_h = max(sigma_h, sigma_min)
    return h_max, h_min, r_step, sigma_o, sigma_h


def inclination_risk(
    cell: tuple[int, int],
    local: LocalTerrainMap,
    l: float,
    incl_norm: str = "two_pi",
) -> float:
    """
    Steepest slope from a cell to its populated neighbors within `l`,
    `arcsin(min(|dh| / d, 1))`, divided by 2 pi (`two_pi`) or by
    pi / 2 (`half_pi`).

    Example:
        >>> from tripmap.grid import GridSpec
        >>> local = LocalTerrainMap.empty(GridSpec(0.2, (0.4, 0.2)))
        >>> local.provenance[0, :] = OBSERVED
        >>> local.h_max[0, :] = [0.0, 0.1]
        >>> round(inclination_risk((0, 0), local, 0.5), 6)
        0.083333

    """
    norm = 2.00 * np.pi if incl_norm == "two_pi" else np.pi / 2.00
    iy, ix = cell
    height = local.h_max[iy, ix]
    steepest = 0.00
    for d_y, d_x, dist in disk_offsets(l, local.spec.resolution):
        if dist <= 0.00:
            continue
        n_y, n_x = iy + d_y, ix + d_x
        if not _in_grid(local.spec, n_y, n_x):
            continue
        if local.provenance[n_y, n_x] == EMPTY:
            continue
        ratio = min(abs(local.h_max[n_y, n_x] - height) / dist, 1.00)
        steepest = max(steepest, float(np.arcsin(ratio)))
    return steepest / norm


def collision_risk(
    cell: tuple[int, int],
    local: LocalTerrainMap,
    tau_h: float,
    radius: float,
    mode: str = "span",
) -> float:
    """
    Height measure of the populated cells within `radius` (the cell
    included), divided by `tau_h` and saturated at 1. The `span` mode
    takes the largest `h_max - h_min` of a single cell; the `relief`
    mode takes the highest `h_max` minus the lowest `h_min` over the
    window, which also sees steps that fall on a cell boundary.

    Example:
        >>> local = LocalTerrainMap.empty(GridSpec(0.1, (0.2, 0.1)))
        >>> local.provenance[...] = OBSERVED
        >>> local.h_min[...] = local.h_max[...] = [[0.0, 0.3]]
        >>> collision_risk((0, 0), local, 0.5, 0.15)
        0.0
        >>> round(collision_risk((0, 0), local, 0.5, 0.15, "relief"), 6)
        0.6

    """
    if mode not in common.COLLISION_MODES:
        raise ValueError(
            f"mode must be one of {common.COLLISION_MODES}, got {mode}"
        )
    iy, ix = cell
    span = 0.00
    top, bottom = -np.inf, np.inf
    for d_y, d_x, _ in disk_offsets(radius, local.spec.resolution):
        n_y, n_x = iy + d_y, ix + d_x
        if not _in_grid(local.spec, n_y, n_x):
            continue
        if local.provenance[n_y, n_x] == EMPTY:
            continue
        span = max(span, float(local.h_max[n_y, n_x] - local.h_min[n_y, n_x]))
        top = max(top, float(local.h_max[n_y, n_x]))
        bottom = min(bottom, float(local.h_min[n_y, n_x]))
    if mode == "relief" and top > bottom:
        span = top - bottom
    return min(span / tau_h, 1.00)


def inferred_verticality(
    cell: tuple[int, int], local: LocalTerrainMap, l: float
) -> float:
    """
    Verticality of the plane fitted by PCA to the populated cells
    within `l` of a cell, as `(x, y, h_max)` triples. With fewer than
    three members, or collinear members, the nearest observed cell's
    verticality is used instead, or 0 when there is none.

    """
    iy, ix = cell
    res = local.spec.resolution
    height = local.h_max[iy, ix]
    rel = []
    nearest = (np.inf, 0.00)
    for d_y, d_x, dist in disk_offsets(l, res):
        n_y, n_x = iy + d_y, ix + d_x
        if not _in_grid(local.spec, n_y, n_x):
            continue
        prov = local.provenance[n_y, n_x]
        if prov == EMPTY:
            continue
        rel.append((d_x * res, d_y * res, local.h_max[n_y, n_x] - height))
        if prov == OBSERVED and dist < nearest[0]:
            nearest = (dist, float(local.n_z[n_y, n_x]))
    if len(rel) >= 3:
        pts = np.array(rel)
        cov = np.cov(pts.T, bias=True)
        eigvals, eigvecs = np.linalg.eigh(cov)
        planar = eigvals[1] > common.DEGENERACY_RATIO * eigvals[2]
        if eigvals[2] > 0.00 and planar:
            return float(min(abs(eigvecs[2, 0]), 1.00))
    return nearest[1]


class _Padded:
    """
    Zero-copy neighbor windows of a set of equally shaped layers.

    """

    def __init__(self, reach: int, layers: dict[str, npt.NDArray]):
        self.reach = reach
        self.n_x = next(iter(layers.values())).shape[1]
        self.layers = {}
        for name, arr in layers.items():
            fill = False if arr.dtype == bool else np.nan
            self.layers[name] = np.pad(arr, reach, constant_values=fill)

    def window(
        self, name: str, d_y: int, d_x: int, rows: tuple[int, int]
    ) -> npt.NDArray:
        reach = self.reach
        return self.layers[name][
            rows[0] + reach + d_y : rows[1] + reach + d_y,
            reach + d_x : reach + d_x + self.n_x,
        ]


def _infer_rows(
    grid: SparseElevationGrid,
    padded: _Padded,
    offsets: list[tuple[int, int, float]],
    l: float,
    use_tbgk: bool,
    sigma_min: float,
    inferable: boolarr,
    rows: tuple[int, int],
) -> dict[str, npt.NDArray]:
    res = grid.spec.resolution
    observed = grid.observed[rows[0] : rows[1]]
    shape = observed.shape
    sums = {
        key: np.zeros(shape)
        for key in (
            "plain",
            "aware",
            "plain_r",
            "plain_h",
            "plain_hm",
            "aware_h",
            "aware_hm",
            "plain_ox",
            "plain_oy",
            "aware_ox",
            "aware_oy",
        )
    }
    weights = []
    for d_y, d_x, dist in offsets:
        k = float(bgk_kernel(dist, l))
        ok = padded.window("observed", d_y, d_x, rows)
        r_n = np.where(ok, padded.window("r_step", d_y, d_x, rows), 0.00)
        h_n = np.where(ok, padded.window("h_max", d_y, d_x, rows), 0.00)
        hm_n = np.where(ok, padded.window("h_min", d_y, d_x, rows), 0.00)
        plain = k * ok
        aware = plain * (1.00 - r_n)
        weights.append((plain, aware, h_n))
        sums["plain"] += plain
        sums["aware"] += aware
        sums["plain_r"] += plain * r_n
        sums["plain_h"] += plain * h_n
        sums["plain_hm"] += plain * hm_n
        sums["aware_h"] += aware * h_n
        sums["aware_hm"] += aware * hm_n
        sums["plain_ox"] += plain * (d_x * res)
        sums["plain_oy"] += plain * (d_y * res)
        sums["aware_ox"] += aware * (d_x * res)
        sums["aware_oy"] += aware * (d_y * res)

    prefix = "aware" if use_tbgk else "plain"
    use_plain = np.full(shape, not use_tbgk)
    use_plain |= observed & (sums["aware"] <= 0.00)

    def pick(name: str) -> nparr:
        return np.where(
            use_plain, sums[f"plain{name}"], sums[f"{prefix}{name}"]
        )

    w_sum = pick("")
    inferred = ~observed & inferable[rows[0] : rows[1]] & (w_sum > 0.00)
    safe_w = np.where(w_sum > 0.00, w_sum, 1.00)
    safe_plain = np.where(sums["plain"] > 0.00, sums["plain"], 1.00)

    own = {
        name: getattr(grid, name)[rows[0] : rows[1]]
        for name in ("h_max", "h_min", "r_step", "n_z")
    }
    h_max = np.where(
        observed,
        own["h_max"],
        np.where(inferred, pick("_h") / safe_w, np.nan),
    )
    h_min = np.where(
        observed,
        own["h_min"],
        np.where(inferred, pick("_hm") / safe_w, np.nan),
    )
    r_step = np.where(
        observed,
        own["r_step"],
        np.where(inferred, sums["plain_r"] / safe_plain, np.nan),
    )

    spread = np.zeros(shape)
    h_ref = np.where(observed | inferred, h_max, 0.00)
    for plain, aware, h_n in weights:
        weight = np.where(use_plain, plain, aware)
        spread += weight * np.abs(h_n - h_ref)
    populated = observed | inferred
    offset = np.hypot(pick("_ox"), pick("_oy"))
    sigma_o = np.minimum(offset / (l * safe_w), 1.00)
    sigma_h = np.minimum(spread / safe_w, 1.00)
    sigma_o = np.where(observed, np.maximum(sigma_o, sigma_min), sigma_o)
    sigma_h = np.where(observed, np.maximum(sigma_h, sigma_min), sigma_h)

    provenance = np.where(
        observed, OBSERVED, np.where(inferred, INFERRED, EMPTY)
    )
    return {
        "provenance": provenance.astype(np.int8),
        "h_max": h_max,
        "h_min": h_min,
        "r_step": r_step,
        "n_z": np.where(observed, own["n_z"], np.nan),
        "sigma_o": np.where(populated, sigma_o, np.nan),
        "sigma_h": np.where(populated, sigma_h, np.nan),
    }


def _derive_rows(
    local: LocalTerrainMap,
    padded: _Padded,
    kernel: list[tuple[int, int, float]],
    coll_kernel: list[tuple[int, int, float]],
    tau_h: float,
    collision_mode: str,
    incl_norm: str,
    rows: tuple[int, int],
) -> dict[str, nparr]:
    res = local.spec.resolution
    prov = local.provenance[rows[0] : rows[1]]
    populated = prov != EMPTY
    height = np.where(populated, local.h_max[rows[0] : rows[1]], 0.00)
    shape = prov.shape

    steepest = np.zeros(shape)
    count = np.zeros(shape)
    first = np.zeros(shape + (3,))
    second = np.zeros(shape + (3, 3))
    nearest_d = np.full(shape, np.inf)
    nearest_nz = np.zeros(shape)
    for d_y, d_x, dist in kernel:
        ok = padded.window("populated", d_y, d_x, rows)
        h_n = np.where(ok, padded.window("h_max", d_y, d_x, rows), 0.00)
        if dist > 0.00:
            ratio = np.clip(np.abs(h_n - height) / dist, 0.00, 1.00)
            steepest = np.where(
                ok, np.maximum(steepest, np.arcsin(ratio)), steepest
            )
        rel = np.stack(
            (
                np.full(shape, d_x * res),
                np.full(shape, d_y * res),
                h_n - height,
            ),
            axis=-1,
        )
        rel = np.where(ok[..., None], rel, 0.00)
        count += ok
        first += rel
        second += rel[..., :, None] * rel[..., None, :]
        seen = padded.window("observed", d_y, d_x, rows) & (dist < nearest_d)
        nz_n = padded.window("n_z", d_y, d_x, rows)
        nearest_nz = np.where(seen, nz_n, nearest_nz)
        nearest_d = np.where(seen, dist, nearest_d)

    span = np.zeros(shape)
    top = np.full(shape, -np.inf)
    bottom = np.full(shape, np.inf)
    for d_y, d_x, _ in coll_kernel:
        ok = padded.window("populated", d_y, d_x, rows)
        hi_n = padded.window("h_max", d_y, d_x, rows)
        lo_n = padded.window("h_min", d_y, d_x, rows)
        span = np.where(ok, np.maximum(span, hi_n - lo_n), span)
        top = np.where(ok, np.maximum(top, hi_n), top)
        bottom = np.where(ok, np.minimum(bottom, lo_n), bottom)
    if collision_mode == "relief":
        span = np.where(top > bottom, top - bottom, span)

    norm = 2.00 * np.pi if incl_norm == "two_pi" else np.pi / 2.00
    r_incl = np.where(populated, steepest / norm, np.nan)
    r_coll = np.where(populated, np.minimum(span / tau_h, 1.00), np.nan)

    n_z = local.n_z[rows[0] : rows[1]].copy()
    inferred = prov == INFERRED
    n_z[inferred] = nearest_nz[inferred]
    fit = inferred & (count >= 3)
    if np.any(fit):
        num = count[fit][:, None, None]
        mean = first[fit] / num[:, :, 0]
        cov = second[fit] / num - mean[:, :, None] * mean[:, None, :]
        eigvals, eigvecs = np.linalg.eigh(cov)
        planar = (eigvals[:, 2] > 0.00) & (
            eigvals[:, 1] > common.DEGENERACY_RATIO * eigvals[:, 2]
        )
        fit_rows, fit_cols = np.nonzero(fit)
        n_z[fit_rows[planar], fit_cols[planar]] = np.minimum(
            np.abs(eigvecs[planar, 2, 0]), 1.00
        )
    return {"r_incl": r_incl, "r_coll": r_coll, "n_z": n_z}


def complete(
    grid: SparseElevationGrid,
    l: float,
    tau_h: float,
    use_tbgk: bool = True,
    bound_inference: bool = True,
    incl_norm: str = "two_pi",
    sigma_min: float = 0.01,
    collision_radius: Optional[float] = None,
    collision_mode: str = "span",
    threads: int = 1,
) -> LocalTerrainMap:
    """
    Completes a sparse grid into a local terrain map.

    Observed cells keep their measured heights, verticality and
    steppability. Unobserved cells within the observability bound of
    the scan are inferred from the observed cells within `l`; cells
    that receive no weight stay empty. Inferred values do not feed
    back into other cells of the same scan. Inclination and collision
    risks, and the verticality of inferred cells, are then derived
    from the completed heights.

    Arguments:
        grid: Sparse observed grid.
        l: Kernel radius (m).
        tau_h: Height span that saturates the collision risk (m).
        use_tbgk: Weight height inference by neighbor steppability.
        bound_inference: Only infer cells within the observed range of
          their sensor column.
        incl_norm: `two_pi` or `half_pi`.
        sigma_min: Floor of the biases of observed cells.
        collision_radius: Radius of the collision window, `l` if None.
        collision_mode: `span` or `relief`, see `collision_risk`.
        threads: Worker threads (grid rows are split among them).

    """
    if not l > 0.00 or not tau_h > 0.00:
        raise ValueError("Kernel radius and tau_h must be positive")
    if collision_mode not in common.COLLISION_MODES:
        raise ValueError(
            f"collision_mode must be one of {common.COLLISION_MODES}, "
            f"got {collision_mode}"
        )
    spec = grid.spec
    res = spec.resolution
    n_y = spec.shape[0]
    coll_radius = l if collision_radius is None else collision_radius
    kernel = disk_offsets(l, res)
    coll_kernel = disk_offsets(coll_radius, res)
    reach = max(
        (max(abs(d_y), abs(d_x)) for d_y, d_x, _ in kernel + coll_kernel),
        default=0,
    )

    if bound_inference:
        inferable = grid.observable()
    else:
        inferable = np.ones(spec.shape, dtype=bool)
    padded = _Padded(
        reach,
        {
            "observed": grid.observed,
            "h_max": grid.h_max,
            "h_min": grid.h_min,
            "r_step": grid.r_step,
        },
    )
    parts = common.chunked_map(
        lambda lo, hi: _infer_rows(
            grid, padded, kernel, l, use_tbgk, sigma_min, inferable, (lo, hi)
        ),
        n_y,
        threads,
    )
    local = LocalTerrainMap.empty(spec)
    if not parts:
        return local
    for name in (
        "provenance",
        "h_max",
        "h_min",
        "r_step",
        "n_z",
        "sigma_o",
        "sigma_h",
    ):
        stacked = np.concatenate([part[name] for part in parts], axis=0)
        setattr(local, name, stacked)

    populated = local.populated
    padded = _Padded(
        reach,
        {
            "populated": populated,
            "observed": local.provenance == OBSERVED,
            "h_max": local.h_max,
            "h_min": local.h_min,
            "n_z": local.n_z,
        },
    )
    derived = common.chunked_map(
        lambda lo, hi: _derive_rows(
            local,
            padded,
            kernel,
            coll_kernel,
            tau_h,
            collision_mode,
            incl_norm,
            (lo, hi),
        ),
        n_y,
        threads,
    )
    for name in ("r_incl", "r_coll", "n_z"):
        stacked = np.concatenate([part[name] for part in derived], axis=0)
        setattr(local, name, stacked)
    return local
