"""F-measure with distance-tolerant matching, mIoU, and dataset-level evaluation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError, MissingPredictionError, ShapeMismatchError
from .formats import read_binary_pgm
from .scene_gen import scene_name


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    fn: int
    miou: float | None = None

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.tp, self.fp, self.fn

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, miou: float | None = None) -> "EvalReport":
        if tp + fp == 0 and tp + fn == 0:
            return cls(1.0, 1.0, 1.0, 0, 0, 0, miou)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        return cls(p, r, f_score(p, r), int(tp), int(fp), int(fn), miou)

    def as_dict(self) -> dict:
        d = asdict(self)
        if d["miou"] is None:
            del d["miou"]
        return d


def f_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def default_tolerance(shape) -> float:
    return max(2.0, 0.0075 * math.hypot(*shape[:2]))


def _check_shapes(a, b):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def match_pixels(pred, gt, tolerance: float) -> int:
    """Greedy one-to-one matching, nearest pairs first; returns the match count.

    Pairs at equal distance are taken in row-major order of the unordered
    pixel pair, so swapping ``pred`` and ``gt`` gives the same matching.
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_shapes(pred, gt)
    if tolerance < 1:
        # only coincident pixels can match
        return int(np.count_nonzero(pred & gt))
    p_idx = np.flatnonzero(pred)
    g_idx = np.flatnonzero(gt)
    if p_idx.size == 0 or g_idx.size == 0:
        return 0
    w = pred.shape[1]
    p_pts = np.column_stack(np.divmod(p_idx, w)).astype(float)
    g_pts = np.column_stack(np.divmod(g_idx, w)).astype(float)
    pairs = cKDTree(p_pts).sparse_distance_matrix(cKDTree(g_pts), tolerance, output_type="ndarray")
    if pairs.size == 0:
        return 0
    i, j, d = pairs["i"], pairs["j"], pairs["v"]
    a, b = p_idx[i], g_idx[j]
    order = np.lexsort((np.maximum(a, b), np.minimum(a, b), d))
    used_p = np.zeros(p_idx.size, dtype=bool)
    used_g = np.zeros(g_idx.size, dtype=bool)
    matched = 0
    for k in order:
        pi, gj = i[k], j[k]
        if not used_p[pi] and not used_g[gj]:
            used_p[pi] = used_g[gj] = True
            matched += 1
    return matched


def f_measure(pred, gt, tolerance: float = 0.0) -> EvalReport:
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_shapes(pred, gt)
    if tolerance < 0:
        raise InvalidArgumentError(f"tolerance must be >= 0, got {tolerance}")
    tp = match_pixels(pred, gt, tolerance)
    return EvalReport.from_counts(tp, int(pred.sum()) - tp, int(gt.sum()) - tp)


def miou(pred, gt) -> float:
    """Mean of foreground and background IoU; an empty union scores 1."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_shapes(pred, gt)
    ious = []
    for p, g in ((pred, gt), (~pred, ~gt)):
        union = np.count_nonzero(p | g)
        ious.append(1.0 if union == 0 else np.count_nonzero(p & g) / union)
    return float(np.mean(ious))


@dataclass
class BatchResult:
    per_scene: dict[int, EvalReport]
    micro: EvalReport
    macro: dict[str, float]
    tolerance: float

    def summary(self) -> dict:
        return {
            "count": len(self.per_scene),
            "tolerance": self.tolerance,
            "micro": self.micro.as_dict(),
            "macro": self.macro,
        }

    def write(self, json_path, csv_path=None) -> None:
        json_path = Path(json_path)
        csv_path = Path(csv_path) if csv_path else json_path.with_suffix(".csv")
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "precision", "recall", "f", "tp", "fp", "fn"])
            for sid in sorted(self.per_scene):
                r = self.per_scene[sid]
                w.writerow([sid, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f_measure:.6f}", r.tp, r.fp, r.fn])


def aggregate(per_scene: dict[int, EvalReport], tolerance: float) -> BatchResult:
    tp = sum(r.tp for r in per_scene.values())
    fp = sum(r.fp for r in per_scene.values())
    fn = sum(r.fn for r in per_scene.values())
    reports = list(per_scene.values())
    macro = {
        "precision": float(np.mean([r.precision for r in reports])) if reports else 0.0,
        "recall": float(np.mean([r.recall for r in reports])) if reports else 0.0,
        "f": float(np.mean([r.f_measure for r in reports])) if reports else 0.0,
    }
    mious = [r.miou for r in reports if r.miou is not None]
    if mious:
        macro["miou"] = float(np.mean(mious))
    return BatchResult(per_scene, EvalReport.from_counts(tp, fp, fn), macro, tolerance)


def batch_eval(manifest, pred_dir, tolerance: float | None = None, split: str = "test",
               with_miou: bool = False) -> BatchResult:
    """Score ``pred_dir/<id>.pgm`` against every label in ``split``.

    ``tolerance=None`` uses ``default_tolerance`` of the canvas.
    """
    pred_dir = Path(pred_dir)
    ids = manifest.ids(split)
    missing = [i for i in ids if not (pred_dir / scene_name(i)).exists()]
    if missing:
        raise MissingPredictionError(missing)
    per_scene = {}
    tol = tolerance
    for i in ids:
        gt = manifest.load_label(i)
        pred = read_binary_pgm(pred_dir / scene_name(i))
        if tol is None:
            tol = default_tolerance(gt.shape)
        rep = f_measure(pred, gt, tol)
        if with_miou:
            rep = EvalReport(rep.precision, rep.recall, rep.f_measure, rep.tp, rep.fp, rep.fn, miou(pred, gt))
        per_scene[i] = rep
    return aggregate(per_scene, float(tol if tol is not None else 0.0))
