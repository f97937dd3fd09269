"""
Defines the TerrainMapper, which runs scans through the mapping
pipeline and fuses them into a static terrain map.

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
from typing import Iterable
from typing import Optional
from dataclasses import dataclass, field
from itertools import zip_longest
from time import perf_counter
import logging
import platform
import socket
import sys
from tqdm import tqdm
import numpy as np
import numpy.typing as npt
import pandas as pd
from .completion import INFERRED
from .completion import OBSERVED
from .completion import complete
from .config import PipelineConfig
from .fusion import FusionSettings
from .fusion import StaticTerrainMap
from .fusion import gate_and_update
from .grid import GridSpec
from .projection import RangeScan
from .projection import build_surfel_map
from .reprojection import reproject
from .steppability import conditional_pool
from .steppability import raw_steppability
from .transformations import Pose

boolarr = npt.NDArray[np.bool_]

STAGES = ("projection", "steppability", "reprojection", "completion", "fusion")
TIMING_COLUMNS = ("scan",) + STAGES + ("local", "update", "total")
COUNT_COLUMNS = (
    "scan",
    "points",
    "surfels",
    "observed",
    "inferred",
    "rejected",
    "dropped",
    "overhangs",
)

_SENTINEL = object()


@dataclass(repr=False)
class MapperSettings:
    """
    Mapper settings object.

    Attributes:
      log_file: If specified, the log messages are written to this
        file.
      silent: If True, no messages are printed to the console and no
        progress bar is shown.
      keep_rejections: If True, the rejection mask of every scan is
        kept in `rejections`.

    """

    log_file: Optional[str] = field(default=None)
    silent: bool = field(default=False)
    keep_rejections: bool = field(default=False)


@dataclass(repr=False)
class Warnings:
    """
    Mapper warnings. Helps avoid issuing repeated warnings.
    """

    parent_mapper: TerrainMapper
    issued_warnings: list[str] = field(default_factory=list)

    def issue(self, message: str) -> None:
        """
        Shows unique warning messages.

        Arguments:
          message: Warning message.

        """
        if message not in self.issued_warnings:
            self.parent_mapper.log(f"WARNING: {message}")
            self.issued_warnings.append(message)


@dataclass(repr=False)
class TerrainMapper:
    """
    Runs the mapping pipeline one scan at a time.

    Attributes:
      config: Pipeline parameters.
      settings: Logging and bookkeeping settings.
      static_map: Fused map, created from `config` if not given.
      timings: One row of stage timings (seconds) per scan.
      counts: One row of per-scan counts.
      rejections: Per-scan (window, rejection mask) pairs, if kept.
      logger: Logger object
      warning: Warnings object

    """

    config: PipelineConfig = field(default_factory=PipelineConfig)
    settings: MapperSettings = field(default_factory=MapperSettings)
    static_map: Optional[StaticTerrainMap] = field(default=None)
    timings: list[dict[str, float]] = field(default_factory=list)
    counts: list[dict[str, int]] = field(default_factory=list)
    rejections: list[tuple[GridSpec, boolarr]] = field(default_factory=list)
    logger: Optional[logging.Logger] = field(default=None)
    warning: Warnings = field(init=False)

    def __post_init__(self):
        self.warning = Warnings(self)
        if self.static_map is None:
            self.static_map = StaticTerrainMap(
                resolution=self.config.resolution,
                tile_size=self.config.tile_size,
                settings=FusionSettings.from_config(self.config),
            )
        elif (
            abs(self.static_map.resolution - self.config.resolution) > 1.0e-12
        ):
            raise ValueError(
                f"Map resolution {self.static_map.resolution} does not match "
                f"the configured resolution {self.config.resolution}"
            )
        self._init_logging()

    def __repr__(self):
        res = ""
        res += "TerrainMapper object\n"
        res += f"scans processed: {len(self.timings)}\n"
        res += f"populated cells: {len(self.map)}\n"
        return res

    @property
    def map(self) -> StaticTerrainMap:
        assert self.static_map is not None
        return self.static_map

    def log(self, msg: str) -> None:
        """
        Adds a message to the log file.

        """
        if self.logger:
            self.logger.info(msg)

    def print(self, thing: Any, end: str = "\n") -> None:
        """
        Prints a message to stdout.

        """
        if not self.settings.silent:
            print(thing, end=end)
        if self.logger:
            self.log(str(thing))

    def _init_logging(self) -> None:
        if self.settings.log_file:
            logging.basicConfig(
                filename=self.settings.log_file,
                filemode="w",
                format="%(asctime)s %(name)s %(message)s",
                datefmt="%m/%d/%Y %I:%M:%S %p",
            )
            self.logger = logging.getLogger("tripmap")
            self.logger.setLevel(logging.DEBUG)
        self.log("Mapper started")
        os_system = platform.system()
        self.log(f"Platform: {os_system}")
        if os_system == "Linux":
            self.log(f"Hostname: {socket.gethostname()}")
        self.log(f"Python Version: {sys.version}")
        self.log(f"Configuration:\n{self.config}")

    def local_window(self, pose: Pose) -> GridSpec:
        """
        Robot-centric grid around the sensor, on the map lattice.

        """
        return GridSpec.centered(
            self.config.resolution,
            self.config.extent,
            (float(pose.translation[0]), float(pose.translation[1])),
            self.map.lattice_origin,
        )

    def process_scan(self, scan: RangeScan, pose: Pose, index: int) -> boolarr:
        """
        Runs one scan through every stage and fuses it.

        Returns:
            The rejection mask over the local window.

        Raises:
            RuntimeError: Wrapping any stage failure, with the scan
              index.

        """
        cfg = self.config
        try:
            clock = [perf_counter()]
            smap = build_surfel_map(
                scan,
                cfg.intrinsics,
                normal_kernel=cfg.normal_kernel,
                min_support=cfg.min_support,
                min_range=cfg.min_range,
                literal_elevation=cfg.literal_elevation,
                threads=cfg.threads,
            )
            clock.append(perf_counter())
            risk = raw_steppability(
                smap, cfg.risk_kernel, cfg.literal_prox, threads=cfg.threads
            )
            if cfg.pooling:
                risk = conditional_pool(
                    risk, cfg.pool_kernel, cfg.tau_r, threads=cfg.threads
                )
            clock.append(perf_counter())
            window = self.local_window(pose)
            sparse = reproject(smap, risk, pose, window, cfg.h_p)
            clock.append(perf_counter())
            local = complete(
                sparse,
                cfg.kernel_radius,
                cfg.collision_scale,
                use_tbgk=cfg.use_tbgk,
                bound_inference=cfg.bound_inference,
                incl_norm=cfg.incl_norm,
                sigma_min=cfg.sigma_min,
                collision_radius=cfg.collision_reach,
                collision_mode=cfg.collision_mode,
                threads=cfg.threads,
            )
            clock.append(perf_counter())
            mask = gate_and_update(local, self.map)
            clock.append(perf_counter())
        except (ValueError, KeyError, IndexError, FloatingPointError) as exc:
            raise RuntimeError(f"scan {index}: {exc}") from exc

        row = {"scan": index}
        for k, stage in enumerate(STAGES):
            row[stage] = clock[k + 1] - clock[k]
        row["local"] = clock[4] - clock[0]
        row["update"] = clock[5] - clock[4]
        row["total"] = clock[5] - clock[0]
        self.timings.append(row)

        counts = {
            "scan": index,
            "points": len(scan),
            "surfels": int(smap.valid.sum()),
            "observed": int((local.provenance == OBSERVED).sum()),
            "inferred": int((local.provenance == INFERRED).sum()),
            "rejected": int(mask.sum()),
            "dropped": sparse.dropped,
            "overhangs": sparse.overhangs,
        }
        self.counts.append(counts)
        if self.settings.keep_rejections:
            self.rejections.append((local.spec, mask))
        if counts["surfels"] == 0:
            self.warning.issue("Scan without valid surfels")
        if self.logger:
            self.logger.debug(
                "scan %d: %d points, %d surfels, %d observed, %d inferred, "
                "%d rejected, %d dropped",
                index,
                counts["points"],
                counts["surfels"],
                counts["observed"],
                counts["inferred"],
                counts["rejected"],
                counts["dropped"],
            )
        return mask

    def run(
        self,
        scans: Iterable[RangeScan],
        poses: Iterable[Pose],
        total: Optional[int] = None,
    ) -> StaticTerrainMap:
        """
        Processes paired scan and pose streams in order.

        Raises:
            ValueError: If the streams have different lengths.

        """
        start = len(self.timings)
        pbar = tqdm(total=total, disable=self.settings.silent, unit="scan")
        for offset, (scan, pose) in enumerate(
            zip_longest(scans, poses, fillvalue=_SENTINEL)
        ):
            if scan is _SENTINEL or pose is _SENTINEL:
                pbar.close()
                raise ValueError(
                    f"Scan and pose counts differ (mismatch at item {offset})"
                )
            assert isinstance(scan, RangeScan) and isinstance(pose, Pose)
            self.process_scan(scan, pose, start + offset)
            pbar.update(1)
        pbar.close()
        self.log(f"Processed {len(self.timings) - start} scans")
        return self.map

    def timing_table(self) -> pd.DataFrame:
        """
        Stage timings (seconds) indexed by scan.

        """
        table = pd.DataFrame(self.timings, columns=list(TIMING_COLUMNS))
        return table.set_index("scan")

    def count_table(self) -> pd.DataFrame:
        """
        Per-scan counts indexed by scan.

        """
        table = pd.DataFrame(self.counts, columns=list(COUNT_COLUMNS))
        return table.set_index("scan")


def run_pipeline(
    config: PipelineConfig,
    scans: Iterable[RangeScan],
    poses: Iterable[Pose],
    settings: Optional[MapperSettings] = None,
) -> tuple[StaticTerrainMap, pd.DataFrame]:
    """
    Maps a scan sequence from scratch.

    Returns:
        The fused map and the per-scan stage timing table.

    Example:
        >>> static_map, timings = run_pipeline(PipelineConfig(), [], [],
        ...     MapperSettings(silent=True))
        >>> len(static_map), len(timings)
        (0, 0)

    """
    if settings is None:
        settings = MapperSettings()
    mapper = TerrainMapper(config, settings)
    mapper.run(scans, poses)
    return mapper.map, mapper.timing_table()


# reference per-scan budget (ms) of the narrow and open presets
REFERENCE_BUDGET_MS = {"narrow": 9.341, "open": 13.831}


def timing_summary(timings: pd.DataFrame) -> pd.DataFrame:
    """
    Mean, median and 95th percentile of every stage, in milliseconds.

    """
    columns = [col for col in TIMING_COLUMNS if col != "scan"]
    table = timings[columns] * 1.0e3
    return pd.DataFrame(
        {
            "mean_ms": table.mean(),
            "median_ms": table.median(),
            "p95_ms": table.quantile(0.95),
        }
    )


def flat_update_cost(
    timings: pd.DataFrame, window: int = 100
) -> Optional[bool]:
    """
    Whether the fusion update time stays flat over a long run: the
    largest of the last `window` update times is at most twice the mean
    of the first `window`. None when fewer than `2 * window` scans ran.

    """
    update = timings["update"].to_numpy()
    if update.size < 2 * window:
        return None
    return bool(update[-window:].max() <= 2.00 * update[:window].mean())
