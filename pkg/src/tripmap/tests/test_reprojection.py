"""
Re-projection tests on hand-built surfel maps.

"""

import numpy as np
import pytest
from tripmap.config import SensorIntrinsics
from tripmap.grid import GridSpec
from tripmap.projection import SurfelMap
from tripmap.reprojection import SparseElevationGrid
from tripmap.reprojection import reproject
from tripmap.steppability import RiskImage
from tripmap.transformations import Pose

UP = (0.0, 0.0, 1.0)


def hand_map(entries):
    """
    Surfel map and risk image from (v, u, point, normal, risk) rows.
    A risk of None leaves the pixel without a valid risk.

    """
    intr = SensorIntrinsics(width=8, height=4)
    points = np.full((4, 8, 3), np.nan)
    normals = np.full((4, 8, 3), np.nan)
    valid = np.zeros((4, 8), dtype=bool)
    values = np.full((4, 8), np.nan)
    for v, u, point, normal, risk in entries:
        points[v, u] = point
        normals[v, u] = normal
        valid[v, u] = True
        if risk is not None:
            values[v, u] = risk
    smap = SurfelMap(
        intr, points, normals, valid.copy(), valid, np.full(8, 10.0)
    )
    return smap, RiskImage(intr, values, ~np.isnan(values))


def test_bottom_up_overhang_rejection():
    smap, risk = hand_map(
        [
            (0, 0, (0.55, 0.55, 0.0), UP, 0.1),
            (0, 1, (0.55, 0.55, 0.2), UP, 0.3),
            (0, 2, (0.55, 0.55, 2.0), UP, 0.9),
            (0, 4, (0.55, 0.55, 2.5), UP, 0.9),
            (0, 3, (0.15, 0.15, 0.5), (0.6, 0.0, 0.8), 0.2),
            (1, 0, (5.0, 5.0, 0.0), UP, 0.0),
            (1, 1, (0.35, 0.35, 0.0), UP, None),
        ]
    )
    spec = GridSpec(0.1, (1.0, 1.0))
    grid = reproject(smap, risk, Pose.identity(), spec, h_p=1.0)
    assert grid.overhangs == 2
    assert grid.dropped == 1
    assert int(grid.observed.sum()) == 2
    cell = grid.cell(5, 5)
    assert cell is not None
    assert cell.h_max == 0.2 and cell.h_min == 0.0
    assert cell.r_step == 0.3
    assert cell.n_z == 1.0
    tilted = grid.cell(1, 1)
    assert tilted is not None
    assert abs(tilted.n_z - 0.8) < 1.0e-12
    assert grid.cell(3, 3) is None
    assert np.isnan(grid.h_max[~grid.observed]).all()


def test_larger_step_threshold_keeps_everything():
    smap, risk = hand_map(
        [
            (0, 0, (0.55, 0.55, 0.0), UP, 0.1),
            (0, 1, (0.55, 0.55, 2.0), UP, 0.9),
        ]
    )
    window = GridSpec(0.1, (1.0, 1.0))
    grid = reproject(smap, risk, Pose.identity(), window, h_p=3.0)
    assert grid.overhangs == 0
    assert grid.cell(5, 5).h_max == 2.0
    assert grid.cell(5, 5).r_step == 0.9


def test_pose_moves_surfels_into_world_frame():
    smap, risk = hand_map([(0, 0, (0.5, 0.0, -0.5), UP, 0.0)])
    pose = Pose.from_yaw(np.pi / 2.0, np.array([1.0, 2.0, 0.5]))
    spec = GridSpec(0.1, (4.0, 4.0), origin=(-1.0, 0.0))
    grid = reproject(smap, risk, pose, spec)
    iy, ix = np.argwhere(grid.observed)[0]
    center_x, center_y = spec.cell_center(int(iy), int(ix))
    assert abs(center_x - 1.0) <= 0.05 + 1.0e-9
    assert abs(center_y - 2.5) <= 0.05 + 1.0e-9
    assert abs(grid.h_max[iy, ix]) < 1.0e-12
    assert np.allclose(grid.sensor_position, [1.0, 2.0, 0.5])


def test_mismatched_risk_image_rejected():
    smap, _ = hand_map([(0, 0, (0.55, 0.55, 0.0), UP, 0.1)])
    other = RiskImage(
        SensorIntrinsics(width=4, height=2),
        np.zeros((2, 4)),
        np.ones((2, 4), dtype=bool),
    )
    with pytest.raises(ValueError):
        reproject(smap, other, Pose.identity(), GridSpec(0.1, (1.0, 1.0)))


def test_observable_follows_column_bound():
    intr = SensorIntrinsics(width=4, height=2)
    spec = GridSpec(0.1, (4.0, 4.0), origin=(-2.0, -2.0))
    grid = SparseElevationGrid.empty(spec)
    assert grid.observable().all()
    grid.column_bound = np.array([0.0, 0.0, 1.0, 0.0])
    grid.sensor_position = np.zeros(3)
    grid.sensor_rotation = np.eye(3)
    grid.intrinsics = intr
    observable = grid.observable()

    def at(x, y):
        iy, ix, _ = spec.locate(np.array([x]), np.array([y]))
        return bool(observable[int(iy[0]), int(ix[0])])

    # column 2 looks along azimuths in (-pi/2, 0]
    assert at(0.55, -0.45)
    assert not at(1.05, -0.45)
    assert not at(0.55, 0.45)
    assert not at(-0.45, -0.45)
