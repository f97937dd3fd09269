"""
Map scoring tests.

"""

import math
import numpy as np
import pytest
from tripmap.fusion import MapSnapshot
from tripmap.grid import GridSpec
from tripmap.postprocessing.evaluation import EvalReport
from tripmap.postprocessing.evaluation import collision_metrics
from tripmap.postprocessing.evaluation import evaluate
from tripmap.postprocessing.evaluation import height_errors
from tripmap.postprocessing.evaluation import tolerant_counts
from tripmap.postprocessing.evaluation import write_report
from tripmap.sim.ground_truth import GroundTruthGrid


def make_truth(spec, heights, collision, defined=None):
    if defined is None:
        defined = np.ones(spec.shape, dtype=bool)
    return GroundTruthGrid(
        spec=spec,
        h_max_gt=np.where(defined, heights, np.nan),
        collision_gt=collision & defined,
        traversable_gt=defined & ~collision,
        defined=defined,
    )


def make_snapshot(spec, populated, h_max, r_coll):
    layers = {
        name: np.where(populated, 0.0, np.nan)
        for name in ("h_min", "n_z", "r_step", "r_incl")
    }
    layers["h_max"] = np.where(populated, h_max, np.nan)
    layers["r_coll"] = np.where(populated, r_coll, np.nan)
    return MapSnapshot(spec, populated, layers)


def brute_force_counts(pred, truth, compared, adjacency):
    n_y, n_x = pred.shape
    if adjacency == 8:
        steps = [(d_y, d_x) for d_y in (-1, 0, 1) for d_x in (-1, 0, 1)]
    else:
        steps = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]

    def near(mask, iy, ix):
        for d_y, d_x in steps:
            src_y, src_x = iy + d_y, ix + d_x
            if 0 <= src_y < n_y and 0 <= src_x < n_x and mask[src_y, src_x]:
                return True
        return False

    pred = pred & compared
    truth = truth & compared
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0, "tp_gt": 0}
    for iy in range(n_y):
        for ix in range(n_x):
            if not compared[iy, ix]:
                continue
            if pred[iy, ix]:
                counts["tp" if near(truth, iy, ix) else "fp"] += 1
            if truth[iy, ix]:
                counts["tp_gt" if near(pred, iy, ix) else "fn"] += 1
            missed = truth[iy, ix] and not near(pred, iy, ix)
            if not pred[iy, ix] and not missed:
                counts["tn"] += 1
    return counts


def brute_force_report(snap, truth, adjacency):
    counts = brute_force_counts(
        snap.populated & (np.nan_to_num(snap.layer("r_coll")) >= 0.5),
        truth.collision_gt,
        truth.defined,
        adjacency,
    )
    errors, trav_errors = [], []
    n_y, n_x = truth.spec.shape
    for iy in range(n_y):
        for ix in range(n_x):
            if not (truth.defined[iy, ix] and snap.populated[iy, ix]):
                continue
            err = abs(snap.layer("h_max")[iy, ix] - truth.h_max_gt[iy, ix])
            errors.append(err)
            if truth.traversable_gt[iy, ix]:
                trav_errors.append(err)
    n_pred = counts["tp"] + counts["fp"]
    n_true = counts["tp_gt"] + counts["fn"]
    precision = counts["tp"] / n_pred if n_pred else 0.0
    recall = counts["tp_gt"] / n_true if n_true else 0.0
    f1 = 0.0
    if precision + recall > 0.0:
        f1 = 2.0 * precision * recall / (precision + recall)
    total = int(truth.defined.sum())
    return counts | {
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "accuracy": (counts["tp"] + counts["tn"]) / total if total else 0.0,
        "mhe": sum(errors) / len(errors) if errors else math.nan,
        "mte": (
            sum(trav_errors) / len(trav_errors) if trav_errors else math.nan
        ),
    }


def random_scoring_case(rng, shape):
    spec = GridSpec(0.1, (shape[1] * 0.1, shape[0] * 0.1))
    defined = rng.uniform(size=shape) < 0.9
    heights = rng.uniform(-1.0, 1.0, size=shape)
    collision = rng.uniform(size=shape) < 0.2
    truth = make_truth(spec, heights, collision, defined)
    populated = rng.uniform(size=shape) < 0.8
    snap = make_snapshot(
        spec,
        populated,
        heights + rng.normal(0.0, 0.1, size=shape),
        rng.uniform(size=shape),
    )
    return snap, truth


@pytest.mark.parametrize("adjacency", [4, 8])
def test_scores_match_brute_force(adjacency):
    rng = np.random.default_rng(adjacency)
    for _ in range(200):
        shape = tuple(int(n) for n in rng.integers(1, 17, size=2))
        snap, truth = random_scoring_case(rng, shape)
        report = evaluate(snap, truth, adjacency=adjacency)
        expected = brute_force_report(snap, truth, adjacency)
        predicted = snap.populated & (snap.layer("r_coll") >= 0.5)
        counts = tolerant_counts(
            predicted, truth.collision_gt, truth.defined, adjacency
        )
        for key in ("tp", "fp", "fn", "tn", "tp_gt"):
            assert counts[key] == getattr(report, key) == expected[key]
        total = report.tp + report.fp + report.fn + report.tn
        assert total == report.cells_compared == int(truth.defined.sum())
        for key in ("precision", "recall", "f1", "accuracy"):
            assert abs(getattr(report, key) - expected[key]) < 1.0e-12
        for key in ("mhe", "mte"):
            if math.isnan(expected[key]):
                assert math.isnan(getattr(report, key))
            else:
                assert abs(getattr(report, key) - expected[key]) < 1.0e-12


def test_perfect_map_scores_one():
    spec = GridSpec(0.1, (1.0, 1.0))
    heights = np.zeros(spec.shape)
    heights[4:6, 4:6] = 0.5
    collision = np.zeros(spec.shape, dtype=bool)
    collision[3:7, 3:7] = True
    collision[4:6, 4:6] = False
    truth = make_truth(spec, heights, collision)
    everywhere = np.ones(spec.shape, dtype=bool)
    snap = make_snapshot(spec, everywhere, heights, collision * 0.9)
    report = evaluate(snap, truth)
    assert report.valid
    assert report.mhe == 0.0 and report.mte == 0.0
    assert report.precision == report.recall == 1.0
    assert report.f1 == report.accuracy == 1.0
    assert report.coverage_misses == 0


def test_height_errors_skip_unpopulated_cells():
    spec = GridSpec(0.1, (0.4, 0.1))
    collision = np.array([[False, False, False, True]])
    truth = make_truth(spec, np.zeros(spec.shape), collision)
    populated = np.array([[True, True, False, True]])
    heights = np.array([[0.1, -0.3, 9.0, 1.0]])
    snap = make_snapshot(spec, populated, heights, 0.0)
    report = height_errors(snap, truth)
    assert report.height_cells == 3
    assert report.coverage_misses == 1
    assert abs(report.mhe - (0.1 + 0.3 + 1.0) / 3.0) < 1.0e-12
    assert abs(report.mte - 0.2) < 1.0e-12


def test_no_predictions():
    spec = GridSpec(0.1, (0.5, 0.5))
    collision = np.zeros(spec.shape, dtype=bool)
    collision[2, 2] = True
    truth = make_truth(spec, np.zeros(spec.shape), collision)
    everywhere = np.ones(spec.shape, dtype=bool)
    snap = make_snapshot(spec, everywhere, np.zeros(spec.shape), 0.1)
    report = collision_metrics(snap, truth)
    assert report.precision == 0.0
    assert report.recall == 0.0
    assert report.f1 == 0.0
    assert report.fn == 1 and report.tn == 24


def test_snapshot_on_a_different_window():
    """
    A snapshot covering part of the ground-truth window is aligned by
    lattice offset; the rest counts as unpopulated.

    """
    truth_spec = GridSpec(0.1, (1.0, 1.0), origin=(-0.5, -0.5))
    truth = make_truth(
        truth_spec,
        np.zeros(truth_spec.shape),
        np.zeros(truth_spec.shape, dtype=bool),
    )
    snap_spec = GridSpec(0.1, (0.3, 0.2), origin=(0.0, 0.1))
    snap = make_snapshot(
        snap_spec,
        np.ones(snap_spec.shape, dtype=bool),
        np.full(snap_spec.shape, 0.2),
        0.0,
    )
    report = evaluate(snap, truth)
    assert report.height_cells == 6
    assert report.coverage_misses == 94
    assert abs(report.mhe - 0.2) < 1.0e-12
    shifted = make_snapshot(
        GridSpec(0.1, (0.3, 0.2), origin=(0.05, 0.1)),
        np.ones(snap_spec.shape, dtype=bool),
        np.zeros(snap_spec.shape),
        0.0,
    )
    with pytest.raises(ValueError):
        evaluate(shifted, truth)


def test_disjoint_windows_are_invalid():
    spec = GridSpec(0.1, (0.3, 0.3))
    no_collision = np.zeros(spec.shape, dtype=bool)
    truth = make_truth(spec, np.zeros(spec.shape), no_collision)
    far = GridSpec(0.1, (0.3, 0.3), origin=(10.0, 10.0))
    everywhere = np.ones(far.shape, dtype=bool)
    snap = make_snapshot(far, everywhere, np.zeros(far.shape), 0.0)
    report = evaluate(snap, truth)
    assert not report.valid
    assert math.isnan(report.mhe)
    assert "INVALID" in report.to_text()


def test_report_files(tmp_path):
    report = EvalReport(
        mhe=0.012,
        mte=0.01,
        precision=0.5,
        recall=1.0,
        f1=2.0 / 3.0,
        tp=1,
        fp=1,
        tn=7,
        tp_gt=1,
        cells_compared=9,
        height_cells=9,
        valid=True,
    )
    text_path = tmp_path / "report.txt"
    kv_path = tmp_path / "report.kv"
    write_report(report, str(text_path), str(kv_path))
    assert "MHE (MAE): 0.0120 m" in text_path.read_text()
    back = EvalReport.from_key_values(kv_path.read_text())
    assert back.to_dict() == report.to_dict()
    assert len(report.to_frame()) == 1
    with pytest.raises(KeyError):
        EvalReport.from_key_values("speed=3\n")
