"""
Ray casting of simulated range scans.

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
import numpy as np
import numpy.typing as npt
from .. import common
from ..config import SensorIntrinsics
from ..projection import RangeScan
from ..transformations import Pose
from .scene import Polytope
from .scene import Scene

nparr = npt.NDArray[np.float64]

# returns farther than this are treated as misses (m)
MAX_RANGE = 120.00


def pixel_directions(intr: SensorIntrinsics) -> nparr:
    """
    Unit sensor-frame ray direction through the center of every pixel,
    shaped (height, width, 3).

    Example:
        >>> intr = SensorIntrinsics(width=4, height=2)
        >>> dirs = pixel_directions(intr)
        >>> dirs.shape
        (2, 4, 3)
        >>> bool(np.allclose(np.linalg.norm(dirs, axis=-1), 1.0))
        True

    """
    cols = np.arange(intr.width) + 0.50
    rows = np.arange(intr.height) + 0.50
    azimuth = (1.00 - cols / intr.width) * (
        intr.fov_left + intr.fov_right
    ) - intr.fov_right
    elevation = (1.00 - rows / intr.height) * (
        intr.fov_up + intr.fov_down
    ) - intr.fov_down
    elv, azm = np.meshgrid(elevation, azimuth, indexing="ij")
    return np.stack(
        (
            np.cos(elv) * np.cos(azm),
            np.cos(elv) * np.sin(azm),
            np.sin(elv),
        ),
        axis=-1,
    )


def ray_polytope_distance(origin: nparr, dirs: nparr, poly: Polytope) -> nparr:
    """
    Entry distance of each ray into a convex polytope, clipping the ray
    against every halfspace in turn. Rays that miss, or start inside
    the polytope, get `inf`.

    Example:
        >>> from .scene import Box
        >>> box = Box(center=(5.0, 0.0, 0.0), extents=(2.0, 2.0, 2.0))
        >>> ray_polytope_distance(np.zeros(3),
        ...     np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]),
        ...     box.polytopes()[0])
        array([ 4., inf])

    """
    num = dirs.shape[0]
    t_enter = np.full(num, -np.inf)
    t_exit = np.full(num, np.inf)
    hit = np.ones(num, dtype=bool)
    for normal, offset in zip(poly.normals, poly.offsets):
        slack = offset - float(normal @ origin)
        rate = dirs @ normal
        parallel = np.abs(rate) <= common.TINY
        hit &= ~(parallel & (slack < 0.00))
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = slack / rate
        entering = ~parallel & (rate < 0.00)
        leaving = ~parallel & (rate > 0.00)
        t_enter = np.where(entering, np.maximum(t_enter, bound), t_enter)
        t_exit = np.where(leaving, np.minimum(t_exit, bound), t_exit)
    hit &= (t_enter <= t_exit) & (t_enter >= 0.00)
    return np.where(hit, t_enter, np.inf)


def scan_rng(seed: int, scan_index: int) -> np.random.Generator:
    """
    Counter-based generator keyed by (seed, scan index).

    """
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed, scan_index]))
    )


def raycast_scan(
    scene: Scene,
    pose: Pose,
    intr: SensorIntrinsics,
    time: float = 0.00,
    noise_sigma: float = 0.01,
    seed: int = 0,
    scan_index: int = 0,
    max_range: float = MAX_RANGE,
    threads: int = 1,
) -> RangeScan:
    """
    Casts one ray per pixel and returns the sensor-frame hits.

    Each ray returns the nearest hit among the static primitives and
    the dynamic actors at `time`. Range noise is drawn once per pixel,
    in row-major pixel order, from a generator keyed by
    `(seed, scan_index)`, so the scan does not depend on `threads`.
    Misses and hits beyond `max_range` are omitted.

    Arguments:
        scene: Scene to scan.
        pose: Sensor-to-world pose.
        intr: Sensor geometry.
        time: Time used to place the dynamic actors.
        noise_sigma: Standard deviation of the range noise, meters.
        seed: Noise seed.
        scan_index: Index of the scan, stored as its timestamp.
        max_range: Largest range reported.
        threads: Worker threads over image rows.

    Raises:
        ValueError: If the noise is negative or the sensor lies outside
          the scene bounds.

    Example:
        >>> from .scene import Plane
        >>> scene = Scene(static=[Plane(0.0, (-20.0, -20.0, 20.0, 20.0))])
        >>> pose = Pose.from_yaw(0.0, np.array([0.0, 0.0, 1.0]))
        >>> scan = raycast_scan(
        ...     scene, pose, SensorIntrinsics(), noise_sigma=0.0)
        >>> bool(np.allclose(scan.points[:, 2], -1.0))
        True

    """
    if noise_sigma < 0.00:
        raise ValueError(
            f"noise_sigma must be non-negative, got {noise_sigma}"
        )
    if not scene.contains(pose.translation):
        raise ValueError(
            f"Sensor position {tuple(pose.translation.tolist())} lies "
            f"outside the scene bounds {scene.bounds}"
        )
    dirs = pixel_directions(intr)
    world_dirs = dirs.reshape(-1, 3) @ pose.rotation.T
    origin = pose.translation
    polys = scene.polytopes(time)
    rng = scan_rng(seed, scan_index)
    noise = rng.standard_normal(intr.width * intr.height)

    def cast(start: int, stop: int) -> nparr:
        sub = world_dirs[start * intr.width : stop * intr.width]
        nearest = np.full(sub.shape[0], np.inf)
        for poly in polys:
            dist = ray_polytope_distance(origin, sub, poly)
            nearest = np.minimum(nearest, dist)
        return nearest

    distance = np.concatenate(
        [np.empty(0)] + common.chunked_map(cast, intr.height, threads)
    )
    keep = np.isfinite(distance) & (distance <= max_range)
    measured = distance + noise_sigma * noise
    keep &= measured > 0.00
    points = dirs.reshape(-1, 3)[keep] * measured[keep, np.newaxis]
    return RangeScan(points, timestamp=scan_index)


def simulate_sequence(
    scene: Scene,
    intr: SensorIntrinsics,
    noise_sigma: float = 0.01,
    seed: int = 0,
    threads: int = 1,
) -> tuple[list[RangeScan], list[Pose]]:
    """
    Scans along the scene trajectory, one scan per scan period.

    """
    if scene.trajectory is None:
        raise ValueError("Scene has no trajectory to simulate")
    scans = []
    poses = []
    for index, time in enumerate(scene.trajectory.scan_times()):
        pose = scene.trajectory.pose(float(time))
        scans.append(
            raycast_scan(
                scene,
                pose,
                intr,
                time=float(time),
                noise_sigma=noise_sigma,
                seed=seed,
                scan_index=index,
                threads=threads,
            )
        )
        poses.append(pose)
    return scans, poses
