"""
Portable-pixmap rendering of map layers, one pixel per cell.

Rows are written north first, so the image shows the map with +y up
and +x to the right.

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
import numpy as np
import numpy.typing as npt
from matplotlib.colors import LinearSegmentedColormap
from ..fusion import MapSnapshot
from . import graphics_common

nparr = npt.NDArray[np.float64]
uint8arr = npt.NDArray[np.uint8]

RENDERABLE = graphics_common.HEIGHT_LAYERS + graphics_common.RISK_LAYERS


def risk_color_table() -> uint8arr:
    """
    The 256-entry RGB table used for risk layers, from yellow (no
    risk) through green, blue and purple to black (full risk).

    Example:
        >>> table = risk_color_table()
        >>> table.shape
        (256, 3)
        >>> table[0].tolist(), table[-1].tolist()
        ([255, 255, 0], [0, 0, 0])

    """
    cmap = LinearSegmentedColormap.from_list(
        "risk", list(graphics_common.RISK_COLORS), N=256
    )
    rgba = cmap(np.linspace(0.00, 1.00, 256))
    return np.round(rgba[:, :3] * 255.00).astype(np.uint8)


def risk_to_rgb(values: nparr) -> uint8arr:
    """
    Colors of unit-interval values; NaN cells are white.

    """
    table = risk_color_table()
    empty = ~np.isfinite(values)
    clipped = np.clip(np.where(empty, 0.00, values), 0.00, 1.00)
    index = np.round(clipped * 255.00)
    rgb = table[index.astype(np.int64)]
    rgb[empty] = graphics_common.EMPTY_COLOR
    return rgb


def height_to_rgb(values: nparr) -> tuple[uint8arr, float, float]:
    """
    Grayscale min-max rendering of heights; NaN cells are white.

    Returns:
        The image and the (min, max) heights mapped to black and white.
        Both are NaN for an empty layer. A constant layer renders black.

    """
    finite = np.isfinite(values)
    rgb = np.empty(values.shape + (3,), dtype=np.uint8)
    rgb[...] = graphics_common.EMPTY_COLOR
    if not finite.any():
        return rgb, float("nan"), float("nan")
    lo = float(values[finite].min())
    hi = float(values[finite].max())
    span = hi - lo
    scaled = np.zeros(values.shape)
    if span > 0.00:
        scaled = (np.where(finite, values, lo) - lo) / span
    gray = np.round(scaled * 255.00).astype(np.uint8)
    rgb[finite] = np.repeat(gray[finite][:, np.newaxis], 3, axis=1)
    return rgb, lo, hi


def ppm_bytes(rgb: uint8arr) -> bytes:
    """
    Binary (P6) pixmap of an image whose first row is the bottom row
    of the map.

    Example:
        >>> ppm_bytes(np.zeros((1, 2, 3), dtype=np.uint8))[:11]
        b'P6\\n2 1\\n255\\n'

    """
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(rgb[::-1]).tobytes()


def layer_image(
    snap: MapSnapshot, layer: str
) -> tuple[uint8arr, Optional[tuple[float, float]]]:
    """
    RGB image of one layer, bottom row first.

    Risk layers go through the risk color table. Verticality is shown
    as `1 - n_z`, so flat ground has the no-risk color. Heights are
    normalized to grayscale and the normalization range is returned.

    """
    if layer not in RENDERABLE:
        raise KeyError(
            f"Cannot render layer: {layer}. Available: {list(RENDERABLE)}"
        )
    values = snap.layer(layer)
    if layer in graphics_common.HEIGHT_LAYERS:
        rgb, lo, hi = height_to_rgb(values)
        return rgb, (lo, hi)
    if layer == "n_z":
        values = 1.00 - values
    return risk_to_rgb(values), None


def render_layer(snap: MapSnapshot, layer: str, path: str) -> None:
    """
    Writes one layer as a binary pixmap. Height layers also get a
    `<path>.range.txt` sidecar holding the heights mapped to black
    and white.

    """
    rgb, span = layer_image(snap, layer)
    with open(path, "wb") as file:
        file.write(ppm_bytes(rgb))
    if span is not None:
        with open(f"{path}.range.txt", "w", encoding="utf-8") as file:
            file.write(f"layer={layer}\n")
            file.write(f"black={span[0]!r}\n")
            file.write(f"white={span[1]!r}\n")
