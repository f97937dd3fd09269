"""
Synthetic scenes made of convex primitives.

Every primitive is reduced to one or more convex polytopes in halfspace
form `A x <= b`, which is all the ray caster and the ground-truth
sampler need.

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
from typing import Any
from typing import Optional
from dataclasses import dataclass, field
import json
import math
import numpy as np
import numpy.typing as npt
from ..config import SensorIntrinsics
from ..transformations import Pose
from ..transformations import yaw_matrix

nparr = npt.NDArray[np.float64]
Point3 = tuple[float, float, float]

# thickness of the slab that stands in for a ground plane (m)
PLANE_THICKNESS = 0.10


@dataclass(repr=False)
class Polytope:
    """
    Convex polytope `{x : A x <= b}`.

    Attributes:
        normals: (m, 3) outward halfspace normals `A`.
        offsets: (m,) offsets `b`.

    """

    normals: nparr
    offsets: nparr

    def __post_init__(self):
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(
            -1, 3
        )
        self.offsets = np.asarray(self.offsets, dtype=np.float64).reshape(-1)
        if self.normals.shape[0] != self.offsets.shape[0]:
            raise ValueError("Polytope needs one offset per halfspace")
        if not np.all(np.isfinite(self.normals)) or not np.all(
            np.isfinite(self.offsets)
        ):
            raise ValueError("Polytope has non-finite halfspaces")

    def __repr__(self):
        return f"Polytope({self.normals.shape[0]} halfspaces)"

    def translated(self, shift: nparr) -> Polytope:
        """
        The polytope moved by `shift`.

        """
        offsets = self.offsets + self.normals @ np.asarray(shift)
        return Polytope(self.normals, offsets)

    def top_height(self, x: nparr, y: nparr) -> nparr:
        """
        Height of the top face above each (x, y), NaN outside the
        footprint.

        Example:
            >>> box = Box(center=(0.0, 0.0, 0.15), extents=(1.0, 1.0, 0.3))
            >>> box.polytopes()[0].top_height(np.array([0.0, 2.0]),
            ...     np.array([0.0, 0.0]))
            array([0.3, nan])

        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        top = np.full(x.shape, np.inf)
        bottom = np.full(x.shape, -np.inf)
        inside = np.ones(x.shape, dtype=bool)
        for (a_x, a_y, a_z), b_val in zip(self.normals, self.offsets):
            rest = b_val - a_x * x - a_y * y
            if a_z > 0.00:
                top = np.minimum(top, rest / a_z)
            elif a_z < 0.00:
                bottom = np.maximum(bottom, rest / a_z)
            else:
                inside &= rest >= 0.00
        inside &= (bottom <= top) & np.isfinite(top)
        return np.where(inside, top, np.nan)


def _oriented_box(center: nparr, half: nparr, yaw: float) -> Polytope:
    rot = yaw_matrix(yaw)
    normals = []
    offsets = []
    for axis in range(3):
        direction = rot[:, axis]
        reach = float(direction @ center)
        normals.append(direction)
        offsets.append(reach + half[axis])
        normals.append(-direction)
        offsets.append(-reach + half[axis])
    return Polytope(np.array(normals), np.array(offsets))


@dataclass(repr=False)
class Box:
    """
    Box with vertical sides, rotated about z.

    Attributes:
        center: (x, y, z) of the box center.
        extents: Full edge lengths along the box axes.
        yaw: Rotation about z, radians.

    """

    center: tuple[float, float, float]
    extents: tuple[float, float, float]
    yaw: float = field(default=0.00)

    def __repr__(self):
        return (
            f"Box(center={self.center}, extents={self.extents}, "
            f"yaw={self.yaw})"
        )

    def polytopes(self) -> list[Polytope]:
        return [
            _oriented_box(
                np.asarray(self.center, dtype=float),
                np.asarray(self.extents, dtype=float) / 2.00,
                self.yaw,
            )
        ]


@dataclass(repr=False)
class Ramp:
    """
    Wedge rising along its local x axis.

    Attributes:
        origin: (x, y, z) of the low corner.
        size: (length, width) of the footprint, local x and y.
        slope: Inclination, degrees.
        yaw: Rotation of the footprint about z, radians.

    Example:
        >>> ramp = Ramp(origin=(0.0, 0.0, 0.0), size=(2.0, 1.0), slope=45.0)
        >>> top = ramp.polytopes()[0]
        >>> hgt = top.top_height(np.array([1.0]), np.array([0.5]))
        >>> assert abs(hgt[0] - 1.0) < 1e-9

    """

    origin: tuple[float, float, float]
    size: tuple[float, float]
    slope: float
    yaw: float = field(default=0.00)

    def __repr__(self):
        return (
            f"Ramp(origin={self.origin}, size={self.size}, "
            f"slope={self.slope})"
        )

    def polytopes(self) -> list[Polytope]:
        rot = yaw_matrix(self.yaw)
        axis_x, axis_y = rot[:, 0], rot[:, 1]
        origin = np.asarray(self.origin, dtype=float)
        grade = math.tan(math.radians(self.slope))
        length, width = self.size
        up = np.array([0.0, 0.0, 1.0])
        normals = [
            -axis_x,
            axis_x,
            -axis_y,
            axis_y,
            -up,
            up - grade * axis_x,
        ]
        offsets = [
            -axis_x @ origin,
            axis_x @ origin + length,
            -axis_y @ origin,
            axis_y @ origin + width,
            -origin[2],
            origin[2] - grade * (axis_x @ origin),
        ]
        return [Polytope(np.array(normals), np.array(offsets))]


@dataclass(repr=False)
class Stairs:
    """
    Flight of solid steps rising along the local x axis.

    Attributes:
        origin: (x, y, z) of the bottom corner of the first step.
        rise: Height of each step.
        run: Depth of each step.
        count: Number of steps.
        width: Width along local y.
        yaw: Rotation about z, radians.

    """

    origin: tuple[float, float, float]
    rise: float
    run: float
    count: int
    width: float
    yaw: float = field(default=0.00)

    def __repr__(self):
        return (
            f"Stairs(origin={self.origin}, rise={self.rise}, "
            f"run={self.run}, count={self.count})"
        )

    def polytopes(self) -> list[Polytope]:
        rot = yaw_matrix(self.yaw)
        origin = np.asarray(self.origin, dtype=float)
        out = []
        for k in range(self.count):
            height = (k + 1) * self.rise
            local = np.array(
                [(k + 0.5) * self.run, self.width / 2.00, height / 2.00]
            )
            center = origin + rot @ local
            half = np.array(
                [self.run / 2.00, self.width / 2.00, height / 2.00]
            )
            out.append(_oriented_box(center, half, self.yaw))
        return out


@dataclass(repr=False)
class Plane:
    """
    Horizontal ground patch, modeled as a thin slab below `z`.

    Attributes:
        z: Height of the surface.
        extent: (xmin, ymin, xmax, ymax).

    """

    z: float
    extent: tuple[float, float, float, float]

    def __repr__(self):
        return f"Plane(z={self.z}, extent={self.extent})"

    def polytopes(self) -> list[Polytope]:
        x_lo, y_lo, x_hi, y_hi = self.extent
        center = np.array(
            [
                (x_lo + x_hi) / 2.00,
                (y_lo + y_hi) / 2.00,
                self.z - PLANE_THICKNESS / 2.00,
            ]
        )
        half = np.array(
            [
                (x_hi - x_lo) / 2.00,
                (y_hi - y_lo) / 2.00,
                PLANE_THICKNESS / 2.00,
            ]
        )
        return [_oriented_box(center, half, 0.00)]


@dataclass(repr=False)
class DynamicActor:
    """
    Box moving through timed waypoints.

    The box center follows the (x, y) waypoints, linearly interpolated
    in time and held at the first and last waypoint outside their time
    span.

    Attributes:
        box: Shape of the actor; its center z is kept.
        waypoints: (k, 3) rows of (t, x, y).

    """

    box: Box
    waypoints: nparr

    def __post_init__(self):
        self.waypoints = np.asarray(
            self.waypoints, dtype=np.float64
        ).reshape(-1, 3)
        if self.waypoints.shape[0] < 1:
            raise ValueError("Dynamic actor needs at least one waypoint")
        if np.any(np.diff(self.waypoints[:, 0]) <= 0.00):
            raise ValueError("Waypoint times must increase")

    def __repr__(self):
        return f"DynamicActor({self.box}, {self.waypoints.shape[0]} waypoints)"

    def position(self, time: float) -> tuple[float, float]:
        """
        Center (x, y) at a given time.

        """
        times = self.waypoints[:, 0]
        return (
            float(np.interp(time, times, self.waypoints[:, 1])),
            float(np.interp(time, times, self.waypoints[:, 2])),
        )

    def polytopes(self, time: float) -> list[Polytope]:
        x, y = self.position(time)
        moved = Box((x, y, self.box.center[2]), self.box.extents, self.box.yaw)
        return moved.polytopes()


@dataclass(repr=False)
class Trajectory:
    """
    Planar sensor path.

    Attributes:
        waypoints: (k, 4) rows of (t, x, y, yaw).
        sensor_height: World z of the sensor.
        scan_period: Time between scans.

    """

    waypoints: nparr
    sensor_height: float = field(default=0.50)
    scan_period: float = field(default=0.10)

    def __post_init__(self):
        self.waypoints = np.asarray(
            self.waypoints, dtype=np.float64
        ).reshape(-1, 4)
        if self.waypoints.shape[0] < 1:
            raise ValueError("Trajectory needs at least one waypoint")
        if np.any(np.diff(self.waypoints[:, 0]) < 0.00):
            raise ValueError("Trajectory times must not decrease")
        if not self.scan_period > 0.00:
            raise ValueError("scan_period must be positive")

    def __repr__(self):
        return (
            f"Trajectory({self.waypoints.shape[0]} waypoints, "
            f"period {self.scan_period})"
        )

    def scan_times(self) -> nparr:
        """
        Scan times from the first to the last waypoint.

        Example:
            >>> traj = Trajectory([[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]],
            ...     scan_period=0.5)
            >>> traj.scan_times()
            array([0. , 0.5, 1. ])

        """
        start, stop = self.waypoints[0, 0], self.waypoints[-1, 0]
        num = int(math.floor((stop - start) / self.scan_period + 1.0e-9)) + 1
        return start + np.arange(num) * self.scan_period

    def pose(self, time: float) -> Pose:
        """
        Interpolated sensor pose at a given time.

        """
        times = self.waypoints[:, 0]
        yaw = np.unwrap(self.waypoints[:, 3])
        x = float(np.interp(time, times, self.waypoints[:, 1]))
        y = float(np.interp(time, times, self.waypoints[:, 2]))
        heading = float(np.interp(time, times, yaw))
        return Pose.from_yaw(heading, np.array([x, y, self.sensor_height]))


@dataclass(repr=False)
class Scene:
    """
    Static primitives, moving actors and an optional sensor path.

    Attributes:
        static: Static primitives.
        dynamic: Moving actors.
        bounds: ((xmin, ymin, zmin), (xmax, ymax, zmax)) of the world.
        trajectory: Sensor path, if the scene defines one.
        intrinsics: Sensor geometry, if the scene defines one.

    """

    static: list[Any] = field(default_factory=list)
    dynamic: list[DynamicActor] = field(default_factory=list)
    bounds: tuple[Point3, Point3] = field(
        default=((-50.0, -50.0, -5.0), (50.0, 50.0, 10.0))
    )
    trajectory: Optional[Trajectory] = field(default=None)
    intrinsics: Optional[SensorIntrinsics] = field(default=None)

    def __post_init__(self):
        low, high = np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        if np.any(high <= low):
            raise ValueError(f"Scene bounds are empty: {self.bounds}")
        for actor in self.dynamic:
            if not (
                np.all(actor.waypoints[:, 1] >= low[0])
                and np.all(actor.waypoints[:, 1] <= high[0])
                and np.all(actor.waypoints[:, 2] >= low[1])
                and np.all(actor.waypoints[:, 2] <= high[1])
            ):
                raise ValueError("Dynamic actor path leaves the scene bounds")

    def contains(self, point: nparr) -> bool:
        """
        Whether a world point lies within the scene bounds, boundary
        included.

        Example:
            >>> scene = Scene(bounds=((-1, -1, 0), (1, 1, 2)))
            >>> scene.contains(np.array([0.0, 1.0, 0.5]))
            True
            >>> scene.contains(np.array([0.0, 0.0, 2.5]))
            False

        """
        low, high = np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= low) and np.all(point <= high))

    def __repr__(self):
        res = ""
        res += "Scene object\n"
        res += f"static primitives: {len(self.static)}\n"
        res += f"dynamic actors: {len(self.dynamic)}\n"
        res += f"bounds: {self.bounds}\n"
        return res

    def static_polytopes(self) -> list[Polytope]:
        """
        Polytopes of every static primitive.

        """
        out = []
        for prim in self.static:
            out.extend(prim.polytopes())
        return out

    def polytopes(self, time: float) -> list[Polytope]:
        """
        Static polytopes followed by the actors at `time`.

        """
        out = self.static_polytopes()
        for actor in self.dynamic:
            out.extend(actor.polytopes(time))
        return out


PRIMITIVES = {"box": Box, "ramp": Ramp, "stairs": Stairs, "plane": Plane}


def _primitive_from_dict(data: dict[str, Any]) -> Any:
    data = dict(data)
    kind = data.pop("type", None)
    if kind not in PRIMITIVES:
        raise ValueError(
            f"Unknown primitive type: {kind}. Available: {list(PRIMITIVES)}"
        )
    try:
        return PRIMITIVES[kind](**data)
    except TypeError as exc:
        raise ValueError(f"Invalid {kind} primitive: {exc}") from exc


def _primitive_to_dict(prim: Any) -> dict[str, Any]:
    kind = {cls: name for name, cls in PRIMITIVES.items()}[type(prim)]
    data: dict[str, Any] = {"type": kind}
    for key, val in prim.__dict__.items():
        data[key] = list(val) if isinstance(val, tuple) else val
    return data


def scene_from_dict(data: dict[str, Any]) -> Scene:
    """
    Builds a scene from its JSON-compatible description.

    Example:
        >>> scene = scene_from_dict({
        ...     'static': [{'type': 'plane', 'z': 0.0,
        ...                 'extent': [-5, -5, 5, 5]}],
        ...     'bounds': [[-5, -5, -1], [5, 5, 3]]})
        >>> len(scene.static_polytopes())
        1

    """
    known = {"static", "dynamic", "bounds", "trajectory", "intrinsics"}
    for key in data:
        if key not in known:
            raise KeyError(f"Unknown scene key: {key}")
    static = [_primitive_from_dict(item) for item in data.get("static", [])]
    dynamic = []
    for item in data.get("dynamic", []):
        box_data = dict(item["box"])
        box_data.pop("type", None)
        waypoints = np.array(item["waypoints"])
        dynamic.append(DynamicActor(Box(**box_data), waypoints))
    kwargs: dict[str, Any] = {"static": static, "dynamic": dynamic}
    if "bounds" in data:
        low, high = data["bounds"]
        kwargs["bounds"] = (tuple(low), tuple(high))
    if data.get("trajectory") is not None:
        traj = dict(data["trajectory"])
        kwargs["trajectory"] = Trajectory(
            np.array(traj.pop("waypoints")), **traj
        )
    if data.get("intrinsics") is not None:
        kwargs["intrinsics"] = SensorIntrinsics.from_dict(data["intrinsics"])
    return Scene(**kwargs)


def scene_to_dict(scene: Scene) -> dict[str, Any]:
    """
    JSON-compatible description of a scene.

    """
    data: dict[str, Any] = {
        "static": [_primitive_to_dict(prim) for prim in scene.static],
        "dynamic": [
            {
                "box": _primitive_to_dict(actor.box),
                "waypoints": actor.waypoints.tolist(),
            }
            for actor in scene.dynamic
        ],
        "bounds": [list(scene.bounds[0]), list(scene.bounds[1])],
    }
    if scene.trajectory is not None:
        data["trajectory"] = {
            "waypoints": scene.trajectory.waypoints.tolist(),
            "sensor_height": scene.trajectory.sensor_height,
            "scan_period": scene.trajectory.scan_period,
        }
    if scene.intrinsics is not None:
        data["intrinsics"] = scene.intrinsics.to_dict()
    return data


def load_scene(path: str) -> Scene:
    """
    Reads a scene description file (JSON).

    """
    with open(path, "r", encoding="utf-8") as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed scene file: {exc}") from exc
    return scene_from_dict(data)


def save_scene(scene: Scene, path: str) -> None:
    """
    Writes a scene description file (JSON).

    """
    with open(path, "w", encoding="utf-8") as file:
        json.dump(scene_to_dict(scene), file, indent=2)
