"""
Binary export and import of the static terrain map.

The container is a fixed little-endian header followed by one record
per populated cell, ordered by (gy, gx). See FORMATS.md for the byte
layout.

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
import logging
import numpy as np
from scipy.special import expit
from . import common
from .fusion import FusionSettings
from .fusion import StaticTerrainMap

logger = logging.getLogger(__name__)

MAGIC = b"TRIPMAP\x00"
VERSION = 1

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S8"),
        ("version", "<u4"),
        ("resolution", "<f8"),
        ("origin_x", "<f8"),
        ("origin_y", "<f8"),
        ("tile_size", "<u4"),
        ("count", "<u8"),
    ]
)

RECORD_DTYPE = np.dtype(
    [("gx", "<i8"), ("gy", "<i8"), ("o_x", "<f8"), ("o_y", "<f8")]
    + [(f"mean_{name}", "<f8") for name in common.GAUSSIAN_LAYERS]
    + [("r_coll", "<f8")]
    + [(f"var_{name}", "<f8") for name in common.GAUSSIAN_LAYERS]
    + [
        ("coll_logodds", "<f8"),
        ("update_count", "<i8"),
        ("rejections", "<i8"),
    ]
)


def map_to_bytes(static_map: StaticTerrainMap) -> bytes:
    """
    Serialized form of a static map.

    Example:
        >>> blob = map_to_bytes(StaticTerrainMap(0.1))
        >>> len(blob) == HEADER_DTYPE.itemsize
        True
        >>> blob[:8]
        b'TRIPMAP\\x00'

    """
    g_x, g_y = static_map.populated_indices()
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["resolution"] = static_map.resolution
    header["origin_x"] = static_map.lattice_origin[0]
    header["origin_y"] = static_map.lattice_origin[1]
    header["tile_size"] = static_map.tile_size
    header["count"] = g_x.size

    state = static_map.gather(g_x, g_y)
    records = np.zeros(g_x.size, dtype=RECORD_DTYPE)
    records["gx"] = g_x
    records["gy"] = g_y
    res = static_map.resolution
    records["o_x"] = static_map.lattice_origin[0] + (g_x + 0.5) * res
    records["o_y"] = static_map.lattice_origin[1] + (g_y + 0.5) * res
    for name in common.GAUSSIAN_LAYERS:
        records[f"mean_{name}"] = state[f"mean_{name}"]
        records[f"var_{name}"] = state[f"var_{name}"]
    records["r_coll"] = expit(state["coll_logodds"])
    records["coll_logodds"] = state["coll_logodds"]
    records["update_count"] = state["update_count"]
    records["rejections"] = state["rejections"]
    return header.tobytes() + records.tobytes()


def map_from_bytes(
    blob: bytes,
    settings: Optional[FusionSettings] = None,
    source: str = "<bytes>",
) -> StaticTerrainMap:
    """
    Rebuilds a static map from its serialized form. Fused state comes
    back bit-exactly; `r_coll` and the cell centers are derived values
    and are not read back.

    """
    if len(blob) < HEADER_DTYPE.itemsize:
        raise ValueError(
            f"{source}: truncated header ({len(blob)} of "
            f"{HEADER_DTYPE.itemsize} bytes)"
        )
    header = np.frombuffer(blob, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]).ljust(8, b"\x00") != MAGIC:
        raise ValueError(f"{source}: not a terrain map file (bad magic)")
    version = int(header["version"])
    if version != VERSION:
        raise ValueError(
            f"{source}: unsupported map version {version} (expected {VERSION})"
        )
    count = int(header["count"])
    expected = HEADER_DTYPE.itemsize + count * RECORD_DTYPE.itemsize
    if len(blob) != expected:
        raise ValueError(
            f"{source}: truncated or oversized body: {len(blob)} bytes, "
            f"expected {expected} for {count} cells"
        )
    static_map = StaticTerrainMap(
        resolution=float(header["resolution"]),
        lattice_origin=(float(header["origin_x"]), float(header["origin_y"])),
        tile_size=int(header["tile_size"]),
        settings=settings if settings is not None else FusionSettings(),
    )
    records = np.frombuffer(
        blob, dtype=RECORD_DTYPE, count=count, offset=HEADER_DTYPE.itemsize
    )
    if count == 0:
        return static_map
    if np.any(records["update_count"] <= 0):
        raise ValueError(f"{source}: record with zero update count")
    state = {name: records[name].copy() for name in RECORD_DTYPE.names}
    if np.any(records["rejections"] < 0):
        raise ValueError(f"{source}: record with a negative rejection count")
    state["rejections"] = records["rejections"].astype(np.int64)
    static_map.scatter(
        records["gx"].astype(np.int64), records["gy"].astype(np.int64), state
    )
    return static_map


def export_map(static_map: StaticTerrainMap, path: str) -> None:
    """
    Writes a static map to `path`.

    """
    blob = map_to_bytes(static_map)
    with open(path, "wb") as file:
        file.write(blob)
    logger.info("Exported %d cells to %s", len(static_map), path)


def import_map(
    path: str, settings: Optional[FusionSettings] = None
) -> StaticTerrainMap:
    """
    Reads a static map written by `export_map`.

    """
    with open(path, "rb") as file:
        blob = file.read()
    return map_from_bytes(blob, settings, source=path)
