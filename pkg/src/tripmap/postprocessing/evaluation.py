"""
Scoring of a fused map against a ground-truth grid.

Heights are compared on the `h_max` layer. Collision decisions use an
adjacency tolerance: a predicted collision counts as correct when a
ground-truth collision lies in its neighborhood, and a ground-truth
collision counts as found when a predicted collision lies in its
neighborhood.

`mhe` is the mean absolute height error over every compared cell and
is the same quantity sometimes reported as MAE.

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
from dataclasses import dataclass, field, fields
import math
import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy import ndimage
from ..fusion import MapSnapshot
from ..sim.ground_truth import GroundTruthGrid

nparr = npt.NDArray[np.float64]
boolarr = npt.NDArray[np.bool_]

STRUCTURES = {
    8: np.ones((3, 3), dtype=bool),
    4: ndimage.generate_binary_structure(2, 1),
}


@dataclass(repr=False)
class EvalReport:
    """
    Scores of one map.

    Attributes:
        mhe: Mean absolute height error over compared populated cells.
        mte: Same, restricted to traversable ground-truth cells.
        precision: Adjacency-tolerant collision precision.
        recall: Adjacency-tolerant collision recall.
        f1: Harmonic mean of precision and recall, 0 if both are 0.
        accuracy: (tp + tn) / cells_compared.
        tp: Predicted collisions next to a ground-truth collision.
        fp: Predicted collisions with no ground-truth collision nearby.
        fn: Ground-truth collisions with no predicted collision nearby.
        tn: Remaining compared cells.
        tp_gt: Ground-truth collisions with a predicted collision nearby.
        cells_compared: Ground-truth cells with geometry.
        height_cells: Cells where both heights are defined.
        coverage_misses: Compared cells the map never populated.
        valid: False when no cell could be compared on height.

    """

    mhe: float = field(default=math.nan)
    mte: float = field(default=math.nan)
    precision: float = field(default=0.00)
    recall: float = field(default=0.00)
    f1: float = field(default=0.00)
    accuracy: float = field(default=0.00)
    tp: int = field(default=0)
    fp: int = field(default=0)
    fn: int = field(default=0)
    tn: int = field(default=0)
    tp_gt: int = field(default=0)
    cells_compared: int = field(default=0)
    height_cells: int = field(default=0)
    coverage_misses: int = field(default=0)
    valid: bool = field(default=False)

    def __repr__(self):
        return self.to_text()

    def to_dict(self) -> dict[str, Any]:
        return {fld.name: getattr(self, fld.name) for fld in fields(self)}

    def to_frame(self) -> pd.DataFrame:
        """
        One-row table of every score.

        """
        return pd.DataFrame([self.to_dict()])

    def to_text(self) -> str:
        """
        Human-readable report.

        """
        res = ""
        res += "Evaluation report\n"
        if not self.valid:
            res += "INVALID: the map and the ground truth share no cell\n"
        res += f"MHE (MAE): {self.mhe:.4f} m\n"
        res += f"MTE:       {self.mte:.4f} m\n"
        res += f"Precision: {self.precision:.4f}\n"
        res += f"Recall:    {self.recall:.4f}\n"
        res += f"F1:        {self.f1:.4f}\n"
        res += f"Accuracy:  {self.accuracy:.4f}\n"
        res += (
            f"TP / FP / FN / TN: "
            f"{self.tp} / {self.fp} / {self.fn} / {self.tn}\n"
        )
        res += f"Cells compared: {self.cells_compared}\n"
        res += f"Coverage misses: {self.coverage_misses}\n"
        return res

    def to_key_values(self) -> str:
        """
        One `key=value` line per score.

        Example:
            >>> print(EvalReport(tp=3).to_key_values().splitlines()[6])
            tp=3

        """
        lines = []
        for key, val in self.to_dict().items():
            if isinstance(val, bool):
                val = int(val)
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key}={val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_key_values(cls, text: str) -> EvalReport:
        """
        Parses the output of `to_key_values`.

        """
        types = {fld.name: fld.type for fld in fields(cls)}
        kwargs: dict[str, Any] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            if "=" not in line:
                raise ValueError(f"Report line {lineno}: expected key=value")
            key, val = line.split("=", 1)
            if key not in types:
                raise KeyError(f"Unknown report key: {key}")
            if types[key] in ("float", float):
                kwargs[key] = float(val)
            elif types[key] in ("bool", bool):
                kwargs[key] = bool(int(val))
            else:
                kwargs[key] = int(val)
        return cls(**kwargs)


def aligned_layers(
    snap: MapSnapshot, gt: GroundTruthGrid
) -> tuple[boolarr, dict[str, nparr]]:
    """
    The snapshot resampled onto the ground-truth window: populated mask
    and layers, NaN and unpopulated outside the snapshot.

    Raises:
        ValueError: If the two grids are not on a common lattice.

    """
    if not snap.spec.same_lattice(gt.spec):
        raise ValueError("Map and ground truth are not on a common lattice")
    off_x, off_y = snap.spec.lattice_offset(gt.spec.origin)
    n_y, n_x = gt.spec.shape
    s_y, s_x = snap.spec.shape
    populated = np.zeros((n_y, n_x), dtype=bool)
    layers = {name: np.full((n_y, n_x), np.nan) for name in snap.layers}
    # snapshot cell (j, i) sits at ground-truth cell (j + off_y, i + off_x)
    lo_y, hi_y = max(0, off_y), min(n_y, off_y + s_y)
    lo_x, hi_x = max(0, off_x), min(n_x, off_x + s_x)
    if lo_y >= hi_y or lo_x >= hi_x:
        return populated, layers
    src = (
        slice(lo_y - off_y, hi_y - off_y),
        slice(lo_x - off_x, hi_x - off_x),
    )
    dst = (slice(lo_y, hi_y), slice(lo_x, hi_x))
    populated[dst] = snap.populated[src]
    for name, arr in snap.layers.items():
        layers[name][dst] = arr[src]
    return populated, layers


def height_errors(snap: MapSnapshot, gt: GroundTruthGrid) -> EvalReport:
    """
    Height scores. Cells the map never populated are left out of both
    means and counted as coverage misses.

    """
    populated, layers = aligned_layers(snap, gt)
    compared = gt.defined
    both = compared & populated & np.isfinite(layers["h_max"])
    err = np.abs(layers["h_max"] - gt.h_max_gt)
    report = EvalReport(
        cells_compared=int(compared.sum()),
        height_cells=int(both.sum()),
        coverage_misses=int((compared & ~populated).sum()),
        valid=bool(both.any()),
    )
    if report.valid:
        report.mhe = float(err[both].mean())
        trav = both & gt.traversable_gt
        report.mte = float(err[trav].mean()) if trav.any() else math.nan
    return report


def tolerant_counts(
    predicted: boolarr, truth: boolarr, compared: boolarr, adjacency: int = 8
) -> dict[str, int]:
    """
    Adjacency-tolerant confusion counts over the compared cells.

    Example:
        >>> truth = np.zeros((5, 5), dtype=bool); truth[:, 2] = True
        >>> pred = np.zeros((5, 5), dtype=bool); pred[:, 3] = True
        >>> tolerant_counts(pred, truth, np.ones((5, 5), dtype=bool))
        {'tp': 5, 'fp': 0, 'fn': 0, 'tn': 20, 'tp_gt': 5}

    """
    if adjacency not in STRUCTURES:
        raise ValueError(f"adjacency must be 4 or 8, got {adjacency}")
    structure = STRUCTURES[adjacency]
    predicted = predicted & compared
    truth = truth & compared
    near_truth = ndimage.binary_dilation(truth, structure=structure)
    near_pred = ndimage.binary_dilation(predicted, structure=structure)
    t_p = int((predicted & near_truth).sum())
    f_p = int((predicted & ~near_truth).sum())
    f_n = int((truth & ~near_pred).sum())
    tp_gt = int((truth & near_pred).sum())
    t_n = int(compared.sum()) - int(predicted.sum()) - f_n
    return {"tp": t_p, "fp": f_p, "fn": f_n, "tn": t_n, "tp_gt": tp_gt}


def collision_metrics(
    snap: MapSnapshot,
    gt: GroundTruthGrid,
    decision_tau: float = 0.50,
    adjacency: int = 8,
) -> EvalReport:
    """
    Collision scores of `r_coll >= decision_tau` against the ground
    truth. Unpopulated cells count as predicted free. Precision is 0
    when nothing is predicted.

    """
    populated, layers = aligned_layers(snap, gt)
    with np.errstate(invalid="ignore"):
        predicted = populated & (layers["r_coll"] >= decision_tau)
    counts = tolerant_counts(predicted, gt.collision_gt, gt.defined, adjacency)
    total = int(gt.defined.sum())
    report = EvalReport(cells_compared=total, **counts)
    n_pred = counts["tp"] + counts["fp"]
    n_true = counts["tp_gt"] + counts["fn"]
    report.precision = counts["tp"] / n_pred if n_pred else 0.00
    report.recall = counts["tp_gt"] / n_true if n_true else 0.00
    p_r = report.precision + report.recall
    if p_r > 0.00:
        report.f1 = 2.00 * report.precision * report.recall / p_r
    else:
        report.f1 = 0.00
    report.accuracy = (counts["tp"] + counts["tn"]) / total if total else 0.00
    return report


def evaluate(
    snap: MapSnapshot,
    gt: GroundTruthGrid,
    decision_tau: float = 0.50,
    adjacency: int = 8,
) -> EvalReport:
    """
    Height and collision scores in one report.

    """
    heights = height_errors(snap, gt)
    report = collision_metrics(snap, gt, decision_tau, adjacency)
    report.mhe = heights.mhe
    report.mte = heights.mte
    report.height_cells = heights.height_cells
    report.coverage_misses = heights.coverage_misses
    report.valid = heights.valid
    return report


def write_report(report: EvalReport, text_path: str, kv_path: str) -> None:
    """
    Writes the text and key-value forms of a report.

    """
    with open(text_path, "w", encoding="utf-8") as file:
        file.write(report.to_text())
    with open(kv_path, "w", encoding="utf-8") as file:
        file.write(report.to_key_values())
