"""
Spherical projection and surfel estimation tests.

"""

import numpy as np
from tripmap.config import SensorIntrinsics
from tripmap.projection import RangeScan
from tripmap.projection import build_surfel_map
from tripmap.projection import project_point
from tripmap.projection import project_points
from tripmap.sim.raycast import raycast_scan
from tripmap.sim.scene import Box
from tripmap.sim.scene import Plane
from tripmap.sim.scene import Scene
from tripmap.transformations import Pose


def small_sensor():
    return SensorIntrinsics(
        width=180,
        height=32,
        fov_up=np.radians(15.0),
        fov_down=np.radians(25.0),
    )


def floor_scan(intr, noise_sigma=0.0):
    scene = Scene(static=[Plane(0.0, (-30.0, -30.0, 30.0, 30.0))])
    pose = Pose.from_yaw(0.0, np.array([0.0, 0.0, 0.5]))
    return raycast_scan(scene, pose, intr, noise_sigma=noise_sigma)


def test_vectorized_projection_matches_scalar():
    """
    The array projection agrees with the per-point one.

    """
    intr = small_sensor()
    rng = np.random.default_rng(3)
    points = rng.uniform(-5.0, 5.0, size=(500, 3))
    u_idx, v_idx, ok = project_points(points, intr)
    for k, point in enumerate(points):
        pixel = project_point(point, intr)
        if ok[k]:
            assert pixel == (int(u_idx[k]), int(v_idx[k]))
        else:
            assert pixel is None


def test_limited_fov_rejects_points_behind():
    intr = SensorIntrinsics(
        width=64, height=16, fov_left=1.0, fov_right=1.0, full_azimuth=False
    )
    assert project_point(np.array([2.0, 0.1, 0.0]), intr) is not None
    assert project_point(np.array([-2.0, 0.1, 0.0]), intr) is None
    assert project_point(np.array([0.0, 2.0, 0.0]), intr) is None


def test_literal_elevation_rejects_steep_points():
    intr = SensorIntrinsics(width=36, height=8, fov_up=1.5, fov_down=1.5)
    steep = np.array([1.0, 0.0, 1.5])
    assert project_point(steep, intr) is not None
    assert project_point(steep, intr, literal_elevation=True) is None


def test_nearest_point_wins_pixel():
    """
    Two points on the same ray: the closer one is kept, whatever the
    scan order.

    """
    intr = small_sensor()
    far = np.array([4.0, 0.0, -0.4])
    near = far / 2.0
    for points in (np.array([far, near]), np.array([near, far])):
        smap = build_surfel_map(RangeScan(points), intr)
        assert int(smap.occupied.sum()) == 1
        v_idx, u_idx = np.argwhere(smap.occupied)[0]
        assert np.array_equal(smap.points[v_idx, u_idx], near)


def test_min_range_filter():
    intr = small_sensor()
    scan = RangeScan(np.array([[0.1, 0.0, -0.05], [3.0, 0.0, -0.5]]))
    smap = build_surfel_map(scan, intr, min_range=0.3)
    assert int(smap.occupied.sum()) == 1


def test_floor_normals_point_up():
    intr = small_sensor()
    smap = build_surfel_map(floor_scan(intr), intr)
    assert smap.valid.sum() > 100
    normals = smap.normals[smap.valid]
    assert np.all(normals[:, 2] >= 0.0)
    assert np.allclose(normals[:, 2], 1.0, atol=1.0e-6)
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)
    assert np.all(np.isnan(smap.normals[~smap.valid]))
    assert np.all(smap.max_range_per_column > 0.0)


def test_wall_normals_are_horizontal():
    intr = small_sensor()
    scene = Scene(
        static=[
            Plane(0.0, (-30.0, -30.0, 30.0, 30.0)),
            Box(center=(3.1, 0.0, 1.0), extents=(0.2, 6.0, 2.0)),
        ]
    )
    scan = raycast_scan(
        scene,
        Pose.from_yaw(0.0, np.array([0.0, 0.0, 0.5])),
        intr,
        noise_sigma=0.0,
    )
    smap = build_surfel_map(scan, intr)
    on_wall = (
        smap.valid
        & (np.abs(np.nan_to_num(smap.points[..., 0]) - 3.0) < 1.0e-6)
        & (np.nan_to_num(smap.points[..., 2]) > -0.2)
    )
    # interior wall pixels only: every window member on the wall
    interior = on_wall.copy()
    interior[1:-1] &= on_wall[:-2] & on_wall[2:]
    interior[:, 1:-1] &= on_wall[:, :-2] & on_wall[:, 2:]
    interior[[0, -1]] = False
    assert interior.any()
    assert np.allclose(smap.normals[interior][:, 2], 0.0, atol=1.0e-6)


def test_projection_is_thread_independent():
    intr = small_sensor()
    scan = floor_scan(intr, noise_sigma=0.02)
    one = build_surfel_map(scan, intr, threads=1)
    many = build_surfel_map(scan, intr, threads=4)
    assert np.array_equal(one.valid, many.valid)
    assert np.array_equal(one.normals, many.normals, equal_nan=True)
    assert np.array_equal(one.max_range_per_column, many.max_range_per_column)


def test_seam_pixels_use_wrapped_neighbors():
    """
    With a full azimuth the first column sees the last one, so a floor
    pixel on the seam still gets a normal from a 3x3 window.

    """
    intr = small_sensor()
    smap = build_surfel_map(floor_scan(intr), intr, min_support=9)
    assert smap.valid[:, 0].any()
    assert np.array_equal(smap.valid[:, 0], smap.valid[:, intr.width // 2])


def spherical_point(azimuth_deg, elevation_deg, rng=3.0):
    az, el = np.radians(azimuth_deg), np.radians(elevation_deg)
    return rng * np.array(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
    )


def test_collinear_window_has_no_normal():
    """
    Three points stacked in one column lie on a line; a fourth point in
    the next column makes the middle window planar.

    """
    intr = small_sensor()
    column = [spherical_point(0.5, el) for el in (-5.3, -6.55, -7.8)]
    smap = build_surfel_map(RangeScan(np.array(column)), intr)
    assert int(smap.occupied.sum()) == 3
    assert not smap.valid.any()

    beside = spherical_point(2.5, -6.55)
    smap = build_surfel_map(RangeScan(np.array(column + [beside])), intr)
    assert int(smap.occupied.sum()) == 4
    assert smap.valid[17, 89]
    assert int(smap.valid.sum()) == 4
