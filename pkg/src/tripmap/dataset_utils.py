"""
Reading and writing of scan sequences and pose files.

Scans are stored one file per scan, either as KITTI-style binary
float32 quadruplets (x, y, z, intensity) or as comma-separated x, y, z
rows. Poses are stored one per line as the twelve values of the
row-major 3x4 `[R|t]` matrix.

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
from typing import Iterator
from typing import Sequence
import logging
import os
import numpy as np
from .projection import RangeScan
from .transformations import Pose
from .transformations import nearest_rotation
from .transformations import orthonormality_error

logger = logging.getLogger(__name__)

SCAN_FORMATS = ("bin-xyzi", "csv-xyz")
SCAN_EXTENSIONS = {"bin-xyzi": ".bin", "csv-xyz": ".csv"}

# bytes per bin-xyzi record
RECORD_SIZE = 16

# rotation error above which a pose is re-orthonormalized with a warning
POSE_WARN_TOL = 1.0e-3
# rotation error above which a pose is rejected
POSE_REJECT_TOL = 1.0e-2


def read_bin_xyzi(path: str, timestamp: int = 0) -> RangeScan:
    """
    Reads one little-endian float32 (x, y, z, intensity) file.

    """
    size = os.path.getsize(path)
    if size % RECORD_SIZE != 0:
        offset = size - size % RECORD_SIZE
        raise ValueError(f"{path}: truncated record at offset {offset}")
    data = np.fromfile(path, dtype="<f4").astype(np.float64).reshape(-1, 4)
    return RangeScan(data[:, :3], intensity=data[:, 3], timestamp=timestamp)


def read_csv_xyz(path: str, timestamp: int = 0) -> RangeScan:
    """
    Reads one comma-separated x, y, z file. Lines starting with `#`
    are ignored.

    """
    rows = []
    with open(path, "r", encoding="utf-8") as file:
        for lineno, line in enumerate(file, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}, line {lineno}: "
                    f"expected 3 fields, got {len(fields)}"
                )
            try:
                rows.append([float(val) for val in fields])
            except ValueError as exc:
                raise ValueError(
                    f"{path}, line {lineno}: non-numeric field"
                ) from exc
    points = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return RangeScan(points, timestamp=timestamp)


READERS = {"bin-xyzi": read_bin_xyzi, "csv-xyz": read_csv_xyz}


def scan_files(path: str, fmt: str) -> list[str]:
    """
    Scan files of a sequence, in lexicographic filename order. `path`
    may be a single file.

    """
    if fmt not in SCAN_FORMATS:
        raise ValueError(
            f"Unknown scan format: {fmt}. Available: {SCAN_FORMATS}"
        )
    if os.path.isfile(path):
        return [path]
    if not os.path.isdir(path):
        raise FileNotFoundError(f"No such scan file or directory: {path}")
    ext = SCAN_EXTENSIONS[fmt]
    return [
        os.path.join(path, name)
        for name in sorted(os.listdir(path))
        if name.endswith(ext)
    ]


def ingest_scan_sequence(
    path: str, fmt: str = "bin-xyzi"
) -> Iterator[RangeScan]:
    """
    Yields one scan per file, in lexicographic filename order. The
    scan timestamp is its position in the sequence.

    """
    files = scan_files(path, fmt)
    reader = READERS[fmt]
    for index, name in enumerate(files):
        scan = reader(name, timestamp=index)
        logger.debug("Read %d points from %s", len(scan), name)
        yield scan


def write_scan(scan: RangeScan, path: str, fmt: str = "bin-xyzi") -> None:
    """
    Writes one scan. Missing intensities are written as zero.

    """
    if fmt == "bin-xyzi":
        data = np.zeros((len(scan), 4), dtype="<f4")
        data[:, :3] = scan.points
        if scan.intensity is not None:
            data[:, 3] = scan.intensity
        data.tofile(path)
    elif fmt == "csv-xyz":
        np.savetxt(path, scan.points, delimiter=",", fmt="%.9g")
    else:
        raise ValueError(
            f"Unknown scan format: {fmt}. Available: {SCAN_FORMATS}"
        )


def write_scan_sequence(
    scans: Sequence[RangeScan], directory: str, fmt: str = "bin-xyzi"
) -> list[str]:
    """
    Writes a sequence as zero-padded numbered files, so that the
    lexicographic order is the sequence order.

    """
    os.makedirs(directory, exist_ok=True)
    names = []
    for index, scan in enumerate(scans):
        name = os.path.join(directory, f"{index:06d}{SCAN_EXTENSIONS[fmt]}")
        write_scan(scan, name, fmt)
        names.append(name)
    return names


def parse_pose_line(line: str, lineno: int = 1) -> Pose:
    """
    Parses one pose line.

    Example:
        >>> pose = parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 0")
        >>> bool(np.allclose(pose.matrix34(), np.hstack((np.eye(3),
        ...     np.zeros((3, 1))))))
        True
        >>> parse_pose_line("1 0 0 0 0 1 0 0 0 0 1", lineno=7)
        Traceback (most recent call last):
            ...
        ValueError: Pose line 7: expected 12 fields, got 11

    """
    fields = line.split()
    if len(fields) != 12:
        raise ValueError(
            f"Pose line {lineno}: expected 12 fields, got {len(fields)}"
        )
    try:
        values = np.array([float(val) for val in fields])
    except ValueError as exc:
        raise ValueError(f"Pose line {lineno}: non-numeric field") from exc
    mat = values.reshape(3, 4)
    rotation = mat[:, :3]
    error = orthonormality_error(rotation)
    if error > POSE_REJECT_TOL:
        raise ValueError(
            f"Pose line {lineno}: rotation is not orthonormal "
            f"(error {error:.3e})"
        )
    if error > POSE_WARN_TOL:
        logger.warning(
            "Pose line %d: rotation error %.3e, re-orthonormalized",
            lineno,
            error,
        )
    return Pose(nearest_rotation(rotation), mat[:, 3])


def ingest_poses(path: str) -> Iterator[Pose]:
    """
    Yields the poses of a pose file. Blank lines are skipped.

    """
    with open(path, "r", encoding="utf-8") as file:
        for lineno, line in enumerate(file, start=1):
            if not line.strip():
                continue
            yield parse_pose_line(line, lineno)


def write_poses(poses: Sequence[Pose], path: str) -> None:
    """
    Writes poses one per line.

    """
    with open(path, "w", encoding="utf-8") as file:
        for pose in poses:
            values = pose.matrix34().reshape(-1)
            file.write(" ".join(f"{val:.17g}" for val in values))
            file.write("\n")
