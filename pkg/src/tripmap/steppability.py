"""
Per-pixel steppability risk computed in the spherical projection.

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
from . import common
from .config import SensorIntrinsics
from .projection import Surfel
from .projection import SurfelMap
from .projection import window_shift

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]


@dataclass(repr=False)
class RiskImage:
    """
    Steppability risk per pixel.

    Attributes:
        intrinsics: Projection geometry shared with the surfel map.
        values: (h, w) risks in [0, 1], NaN where invalid.
        valid: (h, w) validity flags.

    """

    intrinsics: SensorIntrinsics
    values: nparr
    valid: boolarr

    def __repr__(self):
        res = ""
        res += "RiskImage object\n"
        res += f"size: {self.intrinsics.width} x {self.intrinsics.height}\n"
        res += f"valid pixels: {int(self.valid.sum())}\n"
        if np.any(self.valid):
            res += f"mean risk: {np.mean(self.values[self.valid]):.4f}\n"
        return res


def proximity_field(
    n_a: nparr, p_a: nparr, n_b: nparr, p_b: nparr, literal: bool = False
) -> nparr:
    """
    Vectorized surfel continuity score over the last axis.

    The default score is
    `|n_a . n_b| * (1 - max(|n_a . dp|, |n_b . dp|) / |dp|)` with
    `dp = p_b - p_a`: 1 for coplanar neighbors, 0 across a step or a
    fold. `literal` keeps the fraction itself instead of its
    complement. Coincident points score 1.

    """
    delta = p_b - p_a
    dist = np.linalg.norm(delta, axis=-1)
    along_a = np.abs(np.sum(n_a * delta, axis=-1))
    along_b = np.abs(np.sum(n_b * delta, axis=-1))
    same = dist <= common.SEPARATION_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.maximum(along_a, along_b) / np.where(same, 1.00, dist)
    frac = np.clip(frac, 0.00, 1.00)
    alignment = np.abs(np.sum(n_a * n_b, axis=-1))
    if literal:
        score = alignment * frac
    else:
        score = alignment * (1.00 - frac)
    return np.where(same, 1.00, np.clip(score, 0.00, 1.00))


def proximity(a: Surfel, b: Surfel, literal: bool = False) -> float:
    """
    Continuity score of two valid surfels, in [0, 1].

    Example:
        >>> up = np.array([0.0, 0.0, 1.0])
        >>> proximity(Surfel([0, 0, 0], up), Surfel([0.1, 0, 0], up))
        1.0
        >>> proximity(Surfel([0, 0, 0], up), Surfel([0, 0, 0.2], up))
        0.0
        >>> proximity(Surfel([0, 0, 0], up), Surfel([0.1, 0, 0.1], [1, 0, 0]))
        0.0
        >>> proximity(Surfel([0, 0, 0], up), Surfel([0, 0, 0], up))
        1.0

    """
    return float(proximity_field(a.n, a.p, b.n, b.p, literal))


def _raw_rows(
    smap: SurfelMap, kernel: int, literal: bool, rows: tuple[int, int]
) -> tuple[nparr, boolarr]:
    band = slice(*rows)
    wrap = smap.intrinsics.full_azimuth
    center_n = smap.normals[band]
    center_p = smap.points[band]
    center_ok = smap.valid[band]
    total = np.zeros(center_ok.shape)
    count = np.zeros(center_ok.shape)
    for d_v in range(-kernel, kernel + 1):
        for d_u in range(-kernel, kernel + 1):
            if d_v == 0 and d_u == 0:
                continue
            nbr_ok = window_shift(smap.valid, d_v, d_u, wrap, False)[band]
            nbr_n = window_shift(smap.normals, d_v, d_u, wrap, np.nan)[band]
            nbr_p = window_shift(smap.points, d_v, d_u, wrap, np.nan)[band]
            use = nbr_ok & center_ok
            score = proximity_field(
                np.where(use[..., None], center_n, 0.00),
                np.where(use[..., None], center_p, 0.00),
                np.where(use[..., None], nbr_n, 0.00),
                np.where(use[..., None], nbr_p, 0.00),
                literal,
            )
            total += np.where(use, score, 0.00)
            count += use
    valid = center_ok & (count > 0)
    values = np.full(center_ok.shape, np.nan)
    n_z = np.abs(center_n[..., 2])
    ratio = n_z[valid] * total[valid] / count[valid]
    risk = 1.00 - np.sqrt(np.clip(ratio, 0.00, 1.00))
    values[valid] = np.clip(risk, 0.00, 1.00)
    return values, valid


def raw_steppability(
    smap: SurfelMap,
    kernel: int = 1,
    literal_prox: bool = False,
    threads: int = 1,
) -> RiskImage:
    """
    Raw risk `1 - sqrt(n_z * mean(prox))` of each valid surfel, the
    mean taken over the valid neighbors of its window (center
    excluded). Pixels without valid neighbors are invalid.

    """
    parts = common.chunked_map(
        lambda lo, hi: _raw_rows(smap, kernel, literal_prox, (lo, hi)),
        smap.intrinsics.height,
        threads,
    )
    return RiskImage(
        smap.intrinsics,
        np.concatenate([part[0] for part in parts], axis=0),
        np.concatenate([part[1] for part in parts], axis=0),
    )


def _pool_rows(
    raw: RiskImage, kernel: int, tau_r: float, rows: tuple[int, int]
) -> nparr:
    band = slice(*rows)
    wrap = raw.intrinsics.full_azimuth
    shape = raw.valid[band].shape
    total = np.zeros(shape)
    count = np.zeros(shape)
    peak = np.full(shape, -np.inf)
    for d_v in range(-kernel, kernel + 1):
        for d_u in range(-kernel, kernel + 1):
            ok = window_shift(raw.valid, d_v, d_u, wrap, False)[band]
            val = window_shift(raw.values, d_v, d_u, wrap, np.nan)[band]
            val = np.where(ok, val, 0.00)
            total += val
            count += ok
            peak = np.where(ok, np.maximum(peak, val), peak)
    center_ok = raw.valid[band]
    out = np.full(shape, np.nan)
    mean = total[center_ok] / count[center_ok]
    out[center_ok] = np.where(mean > tau_r, peak[center_ok], mean)
    return out


def conditional_pool(
    raw: RiskImage, kernel: int = 1, tau_r: float = 0.60, threads: int = 1
) -> RiskImage:
    """
    Conditional pooling: each valid pixel takes the window maximum when
    the window mean exceeds `tau_r`, the window mean otherwise. Only
    valid pixels of the window take part.

    Example:
        >>> intr = SensorIntrinsics(width=3, height=2, full_azimuth=False,
        ...     fov_left=0.5, fov_right=0.5)
        >>> vals = np.array([[0.5, 0.9, np.nan], [np.nan, np.nan, np.nan]])
        >>> raw = RiskImage(intr, vals, ~np.isnan(vals))
        >>> pooled = conditional_pool(raw, 1, 0.6)
        >>> pooled.values[0, :2]
        array([0.9, 0.9])

    """
    if not 0.00 < tau_r < 1.00:
        raise ValueError(f"tau_r must lie in (0, 1), got {tau_r}")
    parts = common.chunked_map(
        lambda lo, hi: _pool_rows(raw, kernel, tau_r, (lo, hi)),
        raw.intrinsics.height,
        threads,
    )
    return RiskImage(
        raw.intrinsics, np.concatenate(parts, axis=0), raw.valid.copy()
    )
