"""
Pipeline configuration objects.

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
from dataclasses import dataclass, field, fields, replace
import json
import math
from . import common


@dataclass(repr=False)
class SensorIntrinsics:
    """
    Spherical projection geometry of a range sensor.

    Attributes:
        width: Number of azimuth columns.
        height: Number of elevation rows.
        fov_up: Field of view above the horizon, radians.
        fov_down: Field of view below the horizon, radians.
        fov_left: Field of view to the left (positive azimuth), radians.
        fov_right: Field of view to the right, radians.
        full_azimuth: True for 360 degree sensors. Requires
          `fov_left + fov_right` to equal 2 pi.

    Example:
        >>> intr = SensorIntrinsics()
        >>> (intr.width, intr.height)
        (360, 64)
        >>> SensorIntrinsics(fov_left=1.0, fov_right=1.0)
        Traceback (most recent call last):
            ...
        ValueError: full_azimuth requires fov_left + fov_right = 2 pi, got 2.0

    """

    width: int = field(default=360)
    height: int = field(default=64)
    fov_up: float = field(default=math.radians(32.00))
    fov_down: float = field(default=math.radians(32.00))
    fov_left: float = field(default=math.pi)
    fov_right: float = field(default=math.pi)
    full_azimuth: bool = field(default=True)

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError(
                f"Image must be at least 2x2, got {self.width}x{self.height}"
            )
        if not self.fov_up + self.fov_down > 0.00:
            raise ValueError("fov_up + fov_down must be positive")
        if not self.fov_left + self.fov_right > 0.00:
            raise ValueError("fov_left + fov_right must be positive")
        if self.full_azimuth and not math.isclose(
            self.fov_left + self.fov_right, 2.00 * math.pi, abs_tol=common.TINY
        ):
            raise ValueError(
                "full_azimuth requires fov_left + fov_right = 2 pi, "
                f"got {self.fov_left + self.fov_right}"
            )

    def __repr__(self):
        res = ""
        res += "SensorIntrinsics object\n"
        res += f"image: {self.width} x {self.height}\n"
        res += (
            f"vertical fov: +{math.degrees(self.fov_up):.2f} / "
            f"-{math.degrees(self.fov_down):.2f} deg\n"
        )
        res += (
            f"horizontal fov: +{math.degrees(self.fov_left):.2f} / "
            f"-{math.degrees(self.fov_right):.2f} deg\n"
        )
        res += f"full_azimuth: {self.full_azimuth}\n"
        return res

    def to_dict(self) -> dict[str, Any]:
        """
        Plain-dictionary form.

        """
        return {fld.name: getattr(self, fld.name) for fld in fields(self)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SensorIntrinsics:
        """
        Builds the intrinsics from a dictionary, rejecting unknown keys.

        """
        known = {fld.name for fld in fields(cls)}
        for key in data:
            if key not in known:
                raise KeyError(f"Unknown sensor intrinsics key: {key}")
        return cls(**data)


# legal values of the enumerated options
INCL_NORMS = ("two_pi", "half_pi")
ABLATIONS = ("no-gate", "vanilla-bgk", "no-pool", "no-bound", "baseline")


@dataclass(repr=False)
class PipelineConfig:
    """
    Every parameter of the mapping pipeline.

    Attributes:
        intrinsics: Sensor projection geometry.
        min_range: Points closer than this are dropped (m).
        normal_kernel: Half-width k of the (2k+1)x(2k+1) PCA window.
        min_support: Minimum occupied pixels in the PCA window.
        risk_kernel: Half-width of the raw steppability window.
        pool_kernel: Half-width of the conditional pooling window.
        tau_r: Pooling threshold on the window mean risk.
        literal_prox: Use the printed proximity fraction instead of its
          complement.
        literal_elevation: Use arcsin(z / sqrt(x^2 + y^2)) for the
          elevation angle instead of the true elevation.
        pooling: If False, the raw risk is passed through unpooled.
        h_p: Platform height used for overhang rejection (m).
        resolution: Cell size (m).
        extent: (width, height) of the robot-centric window (m).
        kernel_radius: Inference kernel radius l (m).
        tau_h: Collision height step (m), shared with the ground truth.
        collision_radius: Radius of the collision-risk window (m).
          Defaults to 1.5 cells, the 8-neighborhood.
        collision_mode: `relief` (highest h_max minus lowest h_min over
          the window) or `span` (largest in-cell h_max - h_min).
        collision_saturation: Height at which the per-scan collision
          risk saturates (m). Defaults to `2 tau_h`, so a step of
          exactly `tau_h` enters the log-odds fusion at even odds.
        use_tbgk: Weight height inference by neighbor steppability.
        bound_inference: Restrict inference to the observed range of
          each azimuth column.
        incl_norm: Normalization of the inclination risk, `two_pi` or
          `half_pi`.
        sigma_min: Floor of both bias models.
        tau_m: Mahalanobis gate threshold. `inf` disables the gate.
        process_var: Per-scan process variance of each Gaussian layer.
        scale_h: Multiplier of the vertical bias used as noise std.
        scale_o: Multiplier of the horizontal bias used as noise std.
        eps: Clamp of collision risks before the logit.
        var_init: Minimum initial variance of a new fused cell.
        max_rejections: Consecutive gate rejections after which a cell
          takes its next measurement. None keeps the gate closed.
        tile_size: Cells per edge of a static-map tile.
        decision_tau: Collision decision threshold used in scoring.
        adjacency: 8 or 4, neighborhood of the collision rules.
        noise_sigma: Simulated range noise std (m).
        seed: Seed of the simulator noise.
        threads: Worker threads used inside each stage.

    Example:
        >>> config = PipelineConfig()
        >>> back = PipelineConfig.from_dict(config.to_dict())
        >>> back.to_dict() == config.to_dict()
        True
        >>> PipelineConfig.from_dict({'tau_x': 1.0})
        Traceback (most recent call last):
            ...
        KeyError: 'Unknown configuration key: tau_x'

    """

    intrinsics: SensorIntrinsics = field(default_factory=SensorIntrinsics)
    min_range: float = field(default=0.30)
    normal_kernel: int = field(default=1)
    min_support: int = field(default=3)
    risk_kernel: int = field(default=1)
    pool_kernel: int = field(default=1)
    tau_r: float = field(default=0.60)
    literal_prox: bool = field(default=False)
    literal_elevation: bool = field(default=False)
    pooling: bool = field(default=True)
    h_p: float = field(default=1.00)
    resolution: float = field(default=0.10)
    extent: tuple[float, float] = field(default=(6.00, 6.00))
    kernel_radius: float = field(default=0.50)
    tau_h: float = field(default=0.25)
    collision_radius: Optional[float] = field(default=None)
    collision_mode: str = field(default="relief")
    collision_saturation: Optional[float] = field(default=None)
    use_tbgk: bool = field(default=True)
    bound_inference: bool = field(default=True)
    incl_norm: str = field(default="two_pi")
    sigma_min: float = field(default=0.01)
    tau_m: float = field(default=3.00)
    process_var: float = field(default=1.0e-4)
    scale_h: float = field(default=1.00)
    scale_o: float = field(default=1.00)
    eps: float = field(default=0.01)
    var_init: float = field(default=0.04)
    max_rejections: Optional[int] = field(default=10)
    tile_size: int = field(default=64)
    decision_tau: float = field(default=0.50)
    adjacency: int = field(default=8)
    noise_sigma: float = field(default=0.01)
    seed: int = field(default=0)
    threads: int = field(default=1)

    def __post_init__(self):
        if isinstance(self.intrinsics, dict):
            self.intrinsics = SensorIntrinsics.from_dict(self.intrinsics)
        self.extent = (float(self.extent[0]), float(self.extent[1]))
        positive = (
            "h_p",
            "resolution",
            "kernel_radius",
            "tau_h",
            "sigma_min",
            "scale_h",
            "scale_o",
            "var_init",
            "tau_m",
        )
        for name in positive:
            if not getattr(self, name) > 0.00:
                raise ValueError(f"{name} must be positive")
        if not 0.00 < self.tau_r < 1.00:
            raise ValueError(f"tau_r must lie in (0, 1), got {self.tau_r}")
        if not 0.00 < self.eps < 0.50:
            raise ValueError(f"eps must lie in (0, 0.5), got {self.eps}")
        if not 0.00 <= self.decision_tau <= 1.00:
            raise ValueError("decision_tau must lie in [0, 1]")
        if not 0.00 < self.sigma_min <= 1.00:
            raise ValueError("sigma_min must lie in (0, 1]")
        if self.min_range < 0.00:
            raise ValueError("min_range must be non-negative")
        if self.process_var < 0.00:
            raise ValueError("process_var must be non-negative")
        if self.noise_sigma < 0.00:
            raise ValueError("noise_sigma must be non-negative")
        for name in ("normal_kernel", "risk_kernel", "pool_kernel"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.min_support < 3:
            raise ValueError("min_support must be at least 3")
        if self.tile_size < 1:
            raise ValueError("tile_size must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.incl_norm not in INCL_NORMS:
            raise ValueError(
                f"incl_norm must be one of {INCL_NORMS}, got {self.incl_norm}"
            )
        if self.adjacency not in (4, 8):
            raise ValueError(f"adjacency must be 4 or 8, got {self.adjacency}")
        for name in ("collision_radius", "collision_saturation"):
            val = getattr(self, name)
            if val is not None and not val > 0.00:
                raise ValueError(f"{name} must be positive")
        if self.collision_mode not in common.COLLISION_MODES:
            raise ValueError(
                f"collision_mode must be one of {common.COLLISION_MODES}, "
                f"got {self.collision_mode}"
            )
        if self.max_rejections is not None and self.max_rejections < 0:
            raise ValueError("max_rejections must be non-negative")
        for ext in self.extent:
            cells = ext / self.resolution
            if ext <= 0.00 or abs(cells - round(cells)) > 1.0e-6:
                raise ValueError(
                    f"extent {self.extent} is not a multiple of "
                    f"resolution {self.resolution}"
                )

    def __repr__(self):
        res = ""
        res += "PipelineConfig object\n"
        res += f"grid: {self.extent[0]} x {self.extent[1]} m"
        res += f" at {self.resolution} m\n"
        res += f"kernel radius: {self.kernel_radius} m\n"
        res += f"tau_r: {self.tau_r}, h_p: {self.h_p}, tau_h: {self.tau_h}\n"
        res += f"tau_m: {self.tau_m}\n"
        res += f"use_tbgk: {self.use_tbgk}, pooling: {self.pooling}"
        res += f", bound_inference: {self.bound_inference}\n"
        return res

    @property
    def collision_reach(self) -> float:
        """
        Effective radius of the collision-risk window.

        """
        if self.collision_radius is None:
            return 1.50 * self.resolution
        return self.collision_radius

    @property
    def collision_scale(self) -> float:
        """
        Height at which the per-scan collision risk saturates.

        """
        if self.collision_saturation is None:
            return 2.00 * self.tau_h
        return self.collision_saturation

    def to_dict(self) -> dict[str, Any]:
        """
        Plain-dictionary form, suitable for JSON.

        """
        data: dict[str, Any] = {}
        for fld in fields(self):
            val = getattr(self, fld.name)
            if fld.name == "intrinsics":
                val = val.to_dict()
            elif fld.name == "extent":
                val = list(val)
            data[fld.name] = val
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PipelineConfig:
        """
        Builds a configuration from a dictionary. Missing keys take
        their defaults; unknown keys are rejected.

        """
        known = {fld.name for fld in fields(cls)}
        for key in data:
            if key not in known:
                raise KeyError(f"Unknown configuration key: {key}")
        kwargs = dict(data)
        if "intrinsics" in kwargs and isinstance(kwargs["intrinsics"], dict):
            kwargs["intrinsics"] = SensorIntrinsics.from_dict(
                kwargs["intrinsics"]
            )
        if "extent" in kwargs:
            kwargs["extent"] = tuple(kwargs["extent"])
        return cls(**kwargs)

    def updated(self, **changes: Any) -> PipelineConfig:
        """
        A validated copy with some fields changed.

        """
        return replace(self, **changes)


def apply_ablation(config: PipelineConfig, name: str) -> PipelineConfig:
    """
    Returns a copy of `config` with one pipeline feature switched off.

    Arguments:
        config: Configuration to start from.
        name: One of `no-gate` (Mahalanobis gate disabled), `vanilla-bgk`
          (height inference ignores steppability), `no-pool` (raw risk
          used directly), `no-bound` (inference not limited to the
          observed column ranges) or `baseline` (`vanilla-bgk` and
          `no-gate` together).

    Example:
        >>> apply_ablation(PipelineConfig(), 'baseline').use_tbgk
        False
        >>> apply_ablation(PipelineConfig(), 'no-gate').tau_m
        inf

    """
    if name == "no-gate":
        return config.updated(tau_m=math.inf)
    if name == "vanilla-bgk":
        return config.updated(use_tbgk=False)
    if name == "no-pool":
        return config.updated(pooling=False)
    if name == "no-bound":
        return config.updated(bound_inference=False)
    if name == "baseline":
        return config.updated(use_tbgk=False, tau_m=math.inf)
    raise KeyError(f"Unknown ablation: {name}. Available: {ABLATIONS}")


def load_config(path: str) -> PipelineConfig:
    """
    Reads a configuration from a JSON file.

    """
    with open(path, "r", encoding="utf-8") as file:
        data = json.load(file)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: configuration must be a JSON object")
    return PipelineConfig.from_dict(data)


def save_config(config: PipelineConfig, path: str) -> None:
    """
    Writes a configuration to a JSON file. An infinite `tau_m` is
    written as `Infinity`, which `load_config` reads back.

    """
    with open(path, "w", encoding="utf-8") as file:
        json.dump(config.to_dict(), file, indent=2, sort_keys=True)

