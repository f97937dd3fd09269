"""
Scene, ray casting and ground-truth tests.

"""

import numpy as np
import pytest
from tripmap.config import SensorIntrinsics
from tripmap.grid import GridSpec
from tripmap.sim.ground_truth import ground_truth
from tripmap.sim.ground_truth import load_ground_truth
from tripmap.sim.ground_truth import save_ground_truth
from tripmap.sim.raycast import raycast_scan
from tripmap.sim.raycast import simulate_sequence
from tripmap.sim.scene import Box
from tripmap.sim.scene import DynamicActor
from tripmap.sim.scene import Plane
from tripmap.sim.scene import Ramp
from tripmap.sim.scene import Scene
from tripmap.sim.scene import Stairs
from tripmap.sim.scene import Trajectory
from tripmap.sim.scene import load_scene
from tripmap.sim.scene import save_scene
from tripmap.sim.scene import scene_from_dict
from tripmap.sim.scene import scene_to_dict
from tripmap.transformations import Pose

GROUND = Plane(0.0, (-5.0, -5.0, 5.0, 5.0))


def sensor():
    return SensorIntrinsics(width=90, height=16)


def test_box_hits_are_exact():
    block = Box(center=(5.0, 0.0, 0.0), extents=(2.0, 2.0, 2.0))
    scene = Scene(static=[block])
    scan = raycast_scan(scene, Pose.identity(), sensor(), noise_sigma=0.0)
    assert len(scan) > 0
    pts = scan.points
    assert np.all(np.abs(pts[:, 0] - 4.0) < 1.0e-9)
    assert np.all(np.abs(pts[:, 1]) <= 1.0 + 1.0e-9)
    assert np.all(np.abs(pts[:, 2]) <= 1.0 + 1.0e-9)


def test_pose_places_the_sensor():
    scene = Scene(static=[GROUND])
    pose = Pose.from_yaw(1.0, np.array([0.5, -0.5, 2.0]))
    scan = raycast_scan(scene, pose, sensor(), noise_sigma=0.0)
    world = pose.apply(scan.points)
    assert np.allclose(world[:, 2], 0.0, atol=1.0e-9)
    assert np.all(np.abs(world[:, :2]) <= 5.0 + 1.0e-9)


def test_sensor_outside_the_scene_is_rejected():
    scene = Scene(
        static=[GROUND], bounds=((-5.0, -5.0, -1.0), (5.0, 5.0, 3.0))
    )
    edge = Pose.from_yaw(0.0, np.array([5.0, -5.0, 3.0]))
    assert len(raycast_scan(scene, edge, sensor(), noise_sigma=0.0)) > 0
    for position in ([5.5, 0.0, 1.0], [0.0, -6.0, 1.0], [0.0, 0.0, 3.5]):
        pose = Pose.from_yaw(0.0, np.array(position))
        with pytest.raises(ValueError, match="outside the scene bounds"):
            raycast_scan(scene, pose, sensor())


def test_noise_is_keyed_by_seed_and_scan():
    scene = Scene(static=[GROUND])
    pose = Pose.from_yaw(0.0, np.array([0.0, 0.0, 1.0]))
    intr = sensor()
    first = raycast_scan(scene, pose, intr, seed=5, scan_index=2)
    again = raycast_scan(scene, pose, intr, seed=5, scan_index=2, threads=3)
    other_seed = raycast_scan(scene, pose, intr, seed=6, scan_index=2)
    other_scan = raycast_scan(scene, pose, intr, seed=5, scan_index=3)
    assert np.array_equal(first.points, again.points)
    assert not np.array_equal(first.points, other_seed.points)
    assert not np.array_equal(first.points, other_scan.points)
    clean = raycast_scan(scene, pose, intr, noise_sigma=0.0)
    ranges = np.linalg.norm(first.points, axis=1) - np.linalg.norm(
        clean.points, axis=1
    )
    assert 0.005 < np.std(ranges) < 0.02


def test_actor_away_from_rays_changes_nothing():
    actor = DynamicActor(
        Box(center=(0.0, 0.0, 30.0), extents=(1.0, 1.0, 1.0)),
        np.array([[0.0, -1.0, 0.0], [1.0, 1.0, 0.0]]),
    )
    pose = Pose.from_yaw(0.0, np.array([0.0, 0.0, 0.5]))
    still = raycast_scan(Scene(static=[GROUND]), pose, sensor(), time=0.5)
    moving = raycast_scan(
        Scene(static=[GROUND], dynamic=[actor]), pose, sensor(), time=0.5
    )
    assert np.array_equal(still.points, moving.points)


def test_actor_interpolates_between_waypoints():
    actor = DynamicActor(
        Box(center=(0.0, 0.0, 0.5), extents=(1.0, 1.0, 1.0)),
        np.array([[0.0, 0.0, 0.0], [2.0, 4.0, -2.0]]),
    )
    assert actor.position(1.0) == (2.0, -1.0)
    assert actor.position(-1.0) == (0.0, 0.0)
    assert actor.position(5.0) == (4.0, -2.0)
    with pytest.raises(ValueError):
        DynamicActor(actor.box, np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
    with pytest.raises(ValueError):
        Scene(dynamic=[actor], bounds=((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)))


def test_simulated_sequence_follows_trajectory():
    scene = Scene(
        static=[GROUND],
        trajectory=Trajectory(
            np.array([[0.0, 0.0, 0.0, 0.0], [0.4, 2.0, 0.0, 0.0]]), 0.6, 0.1
        ),
    )
    scans, poses = simulate_sequence(scene, sensor(), noise_sigma=0.0)
    assert len(scans) == len(poses) == 5
    assert [scan.timestamp for scan in scans] == [0, 1, 2, 3, 4]
    assert np.allclose(poses[2].translation, [1.0, 0.0, 0.6])
    with pytest.raises(ValueError):
        simulate_sequence(Scene(static=[GROUND]), sensor())


def test_flat_ground_truth():
    spec = GridSpec(0.1, (2.0, 2.0), origin=(-1.0, -1.0))
    truth = ground_truth(Scene(static=[GROUND]), spec)
    assert truth.defined.all()
    assert not truth.collision_gt.any()
    assert np.all(truth.h_max_gt == 0.0)


def test_box_perimeter_is_collision():
    scene = Scene(
        static=[GROUND, Box(center=(0.0, 0.0, 0.15), extents=(1.0, 1.0, 0.3))]
    )
    spec = GridSpec(0.1, (3.0, 3.0), origin=(-1.5, -1.5))
    truth = ground_truth(scene, spec)
    expected = np.zeros(spec.shape, dtype=bool)
    expected[9:21, 9:21] = True
    expected[11:19, 11:19] = False
    assert np.array_equal(truth.collision_gt, expected)
    assert int(truth.collision_gt.sum()) == 80
    assert np.allclose(truth.h_max_gt[10:20, 10:20], 0.3)
    four = ground_truth(scene, spec, adjacency=4)
    assert not four.collision_gt[9, 9]
    assert four.collision_gt[9, 10]


def test_stair_treads_are_traversable():
    scene = Scene(
        static=[
            GROUND,
            Stairs(
                origin=(0.0, -0.5, 0.0), rise=0.2, run=0.3, count=3, width=1.0
            ),
        ]
    )
    spec = GridSpec(0.1, (2.0, 2.0), origin=(-1.0, -1.0))
    truth = ground_truth(scene, spec)
    grid_x, grid_y = spec.cell_centers()
    treads = (grid_x > 0.0) & (grid_x < 0.8) & (np.abs(grid_y) < 0.4)
    assert treads.sum() == 8 * 8
    assert not truth.collision_gt[treads].any()
    top_edge = (np.abs(grid_x - 0.85) < 1.0e-9) & (np.abs(grid_y) < 0.4)
    assert truth.collision_gt[top_edge].all()
    last_step = (np.abs(grid_x - 0.75) < 1.0e-9) & (np.abs(grid_y) < 0.5)
    assert np.allclose(truth.h_max_gt[last_step], 0.6)


def test_ground_truth_independent_of_sampling():
    scene = Scene(
        static=[
            GROUND,
            Ramp(origin=(-1.0, -1.0, 0.0), size=(1.0, 1.0), slope=20.0),
            Box(center=(0.5, 0.5, 0.2), extents=(0.4, 0.6, 0.4)),
        ]
    )
    spec = GridSpec(0.1, (4.0, 4.0), origin=(-2.0, -2.0))
    coarse = ground_truth(scene, spec, subsamples=4)
    fine = ground_truth(scene, spec, subsamples=8)
    assert np.max(np.abs(coarse.h_max_gt - fine.h_max_gt)) < 1.0e-3
    assert np.array_equal(coarse.collision_gt, fine.collision_gt)


def test_undefined_cells_are_excluded():
    spec = GridSpec(0.5, (12.0, 2.0), origin=(-6.0, -1.0))
    truth = ground_truth(Scene(static=[GROUND]), spec)
    assert not truth.defined[:, 0].any()
    assert np.isnan(truth.h_max_gt[:, 0]).all()
    assert not (truth.collision_gt | truth.traversable_gt)[:, 0].any()
    assert not truth.collision_gt.any()


def test_ground_truth_file_round_trip(tmp_path):
    block = Box(center=(0.0, 0.0, 0.5), extents=(1.0, 1.0, 1.0))
    scene = Scene(static=[GROUND, block])
    truth = ground_truth(scene, GridSpec(0.1, (2.0, 2.0), origin=(-1.0, -1.0)))
    path = str(tmp_path / "gt.npz")
    save_ground_truth(truth, path)
    loaded = load_ground_truth(path)
    assert loaded.spec.same_lattice(truth.spec)
    assert loaded.spec.shape == truth.spec.shape
    assert np.array_equal(loaded.h_max_gt, truth.h_max_gt)
    assert np.array_equal(loaded.collision_gt, truth.collision_gt)
    assert np.array_equal(loaded.traversable_gt, truth.traversable_gt)


def test_scene_file_round_trip(tmp_path):
    scene = Scene(
        static=[
            GROUND,
            Ramp(origin=(1.0, 0.0, 0.0), size=(2.0, 1.0), slope=15.0, yaw=0.5),
            Stairs(
                origin=(-3.0, 0.0, 0.0), rise=0.15, run=0.3, count=4, width=1.2
            ),
        ],
        dynamic=[
            DynamicActor(
                Box(center=(0.0, 2.0, 0.5), extents=(0.5, 0.5, 1.0)),
                np.array([[0.0, 0.0, 2.0], [3.0, 2.0, 2.0]]),
            )
        ],
        bounds=((-5.0, -5.0, -1.0), (5.0, 5.0, 3.0)),
        trajectory=Trajectory(
            np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.2]])
        ),
        intrinsics=sensor(),
    )
    path = str(tmp_path / "scene.json")
    save_scene(scene, path)
    assert scene_to_dict(load_scene(path)) == scene_to_dict(scene)


def test_scene_description_errors():
    with pytest.raises(KeyError):
        scene_from_dict({"static": [], "lights": []})
    with pytest.raises(ValueError):
        scene_from_dict({"static": [{"type": "cylinder", "radius": 1.0}]})
    with pytest.raises(ValueError):
        scene_from_dict({"static": [{"type": "box", "center": [0, 0, 0]}]})
