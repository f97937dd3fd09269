"""
Parameter presets for the environments the mapper is tuned for.

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
from typing import Callable
from .config import PipelineConfig

# Mahalanobis thresholds for static and dynamic surroundings
TAU_M_STATIC = 3.00
TAU_M_DYNAMIC = 1.00


def _preset(dynamic: bool, **kwargs: Any) -> PipelineConfig:
    tau_m = TAU_M_DYNAMIC if dynamic else TAU_M_STATIC
    return PipelineConfig(tau_m=tau_m, **kwargs)


def narrow_preset(dynamic: bool = False) -> PipelineConfig:
    """
    Confined courses: 6 m x 6 m window at 0.1 m, l = 0.5 m.

    Example:
        >>> cfg = narrow_preset(dynamic=True)
        >>> (cfg.resolution, cfg.kernel_radius, cfg.tau_m)
        (0.1, 0.5, 1.0)

    """
    return _preset(
        dynamic, resolution=0.10, extent=(6.00, 6.00), kernel_radius=0.50
    )


def open_preset(dynamic: bool = False) -> PipelineConfig:
    """
    Open outdoor scenes: 20 m x 20 m window at 0.2 m, l = 1.0 m.

    """
    return _preset(
        dynamic, resolution=0.20, extent=(20.00, 20.00), kernel_radius=1.00
    )


def kitti_preset(dynamic: bool = False) -> PipelineConfig:
    """
    Driving sequences: 80 m x 80 m window at 0.2 m, l = 1.0 m.

    """
    return _preset(
        dynamic, resolution=0.20, extent=(80.00, 80.00), kernel_radius=1.00
    )


PRESETS: dict[str, Callable[[bool], PipelineConfig]] = {
    "narrow": narrow_preset,
    "open": open_preset,
    "kitti": kitti_preset,
}


def load_preset(name: str, dynamic: bool = False) -> PipelineConfig:
    """
    Looks up a preset by name.

    Example:
        >>> load_preset('open').extent
        (20.0, 20.0)
        >>> load_preset('tiny')
        Traceback (most recent call last):
            ...
        KeyError: "Unknown preset: tiny. Available: ..."

    """
    if name not in PRESETS:
        raise KeyError(f"Unknown preset: {name}. Available: {list(PRESETS)}")
    return PRESETS[name](dynamic)
