"""Detection metrics against ground truth: PR, AP, mAP, and id switches.

Matching is the usual greedy protocol: within a frame and class,
predictions claim ground-truth boxes in descending score order (ties keep
input order), each taking the highest-IoU unclaimed box if that IoU meets
the threshold. Average precision is COCO-style, 101-point interpolated.
The headline mAP averages IoU thresholds 0.50 to 0.95 in steps of 0.05.

Identity switches are scored separately: per frame and class, ground
truth is matched one-to-one against track rows by minimum-cost
assignment, and an object changing its matched track id counts one
switch.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import solve_assignment
from .core import (
    BoundingBox,
    ClassMap,
    DEFAULT_CLASS_MAP,
    Detection,
    GroundTruth,
    iou,
    iou_matrix_xyxy,
)
from .errors import ConfigError

MAP_THRESHOLDS = tuple(i / 100 for i in range(50, 100, 5))
RECALL_GRID = tuple(i / 100 for i in range(101))

_FORBIDDEN = 1e6


def greedy_match(
    preds: list[Detection], gt_boxes: list[BoundingBox], iou_threshold: float
) -> list[tuple[float, bool]]:
    """Match one frame's predictions of one class against its ground truth.

    Returns (score, is_true_positive) pairs in descending score order,
    stable for equal scores. Each ground-truth box is claimed at most once,
    by the highest-IoU eligible prediction first; IoU ties go to the
    earliest box.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    claimed = [False] * len(gt_boxes)
    out = []
    for i in order:
        best_iou, best_j = 0.0, -1
        for j, g in enumerate(gt_boxes):
            if claimed[j]:
                continue
            v = iou(preds[i].box, g)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou >= iou_threshold:
            claimed[best_j] = True
            out.append((preds[i].score, True))
        else:
            out.append((preds[i].score, False))
    return out


def average_precision(
    scores, tp_flags, n_gt: int
) -> float | None:
    """101-point interpolated AP from scored true/false-positive flags.

    Returns None when there is nothing to measure (no ground truth and no
    predictions); a class with predictions but no ground truth scores 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    tp_flags = np.asarray(tp_flags, dtype=bool)
    if scores.shape != tp_flags.shape:
        raise ConfigError("scores and tp_flags must have equal length")
    if n_gt < 0:
        raise ConfigError(f"n_gt must be non-negative, got {n_gt}")
    if n_gt == 0:
        return None if scores.size == 0 else 0.0
    if scores.size == 0:
        return 0.0

    order = np.argsort(-scores, kind="stable")
    tp = tp_flags[order]
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    recall = tp_cum / n_gt
    precision = tp_cum / (tp_cum + fp_cum)

    # best precision achievable at or beyond each point
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, np.array(RECALL_GRID), side="left")
    sampled = np.where(
        idx < recall.size, envelope[np.minimum(idx, recall.size - 1)], 0.0
    )
    return float(sampled.sum() / len(RECALL_GRID))


def _collect_class_matches(
    preds: list[Detection], gts: list[GroundTruth], iou_threshold: float
) -> tuple[list[float], list[bool]]:
    """Frame-by-frame greedy matching pooled into one scored list."""
    preds_by_frame: dict[int, list[Detection]] = {}
    for p in preds:
        preds_by_frame.setdefault(p.frame, []).append(p)
    gt_by_frame: dict[int, list[BoundingBox]] = {}
    for g in gts:
        gt_by_frame.setdefault(g.frame, []).append(g.box)

    scores: list[float] = []
    flags: list[bool] = []
    for frame in sorted(preds_by_frame):
        pairs = greedy_match(
            preds_by_frame[frame], gt_by_frame.get(frame, []), iou_threshold
        )
        for score, flag in pairs:
            scores.append(score)
            flags.append(flag)
    return scores, flags


@dataclass(frozen=True)
class ClassReport:
    """One table row; `name` is "all" for the macro-averaged summary row."""

    name: str
    images: int
    instances: int
    precision: float
    recall: float
    map50: float
    map5095: float


@dataclass(frozen=True)
class EvalReport:
    overall: ClassReport
    classes: tuple[ClassReport, ...]

    @property
    def rows(self) -> tuple[ClassReport, ...]:
        return (self.overall, *self.classes)


def evaluate_detections(
    preds: list[Detection],
    gts: list[GroundTruth],
    class_map: ClassMap = DEFAULT_CLASS_MAP,
    iou_threshold: float = 0.5,
    score_threshold: float = 0.25,
) -> EvalReport:
    """Score predictions and produce the per-class report.

    Precision and recall are taken at one operating point: predictions at
    or above score_threshold, matched at iou_threshold. An empty
    denominator yields precision 1 (nothing asserted, nothing wrong) and
    recall 0. Classes absent from both streams get no row.
    """
    if not (0.0 <= score_threshold <= 1.0):
        raise ConfigError(f"score_threshold must be in [0, 1], got {score_threshold}")
    if not (0.0 < iou_threshold <= 1.0):
        raise ConfigError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    class_ids = sorted({g.class_id for g in gts} | {p.class_id for p in preds})
    rows = []
    for cid in class_ids:
        cls_preds = [p for p in preds if p.class_id == cid]
        cls_gts = [g for g in gts if g.class_id == cid]

        aps = []
        map50 = 0.0
        for thr in MAP_THRESHOLDS:
            scores, flags = _collect_class_matches(cls_preds, cls_gts, thr)
            ap = average_precision(scores, flags, len(cls_gts))
            ap = 0.0 if ap is None else ap
            aps.append(ap)
            if thr == MAP_THRESHOLDS[0]:
                map50 = ap

        confident = [p for p in cls_preds if p.score >= score_threshold]
        _, op_flags = _collect_class_matches(confident, cls_gts, iou_threshold)
        tp = sum(op_flags)
        fp = len(op_flags) - tp
        precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
        recall = tp / len(cls_gts) if cls_gts else 0.0

        rows.append(
            ClassReport(
                name=class_map.name_of(cid),
                images=len({g.frame for g in cls_gts}),
                instances=len(cls_gts),
                precision=precision,
                recall=recall,
                map50=map50,
                map5095=sum(aps) / len(aps),
            )
        )

    frames = {g.frame for g in gts} | {p.frame for p in preds}
    if rows:
        overall = ClassReport(
            name="all",
            images=len(frames),
            instances=sum(r.instances for r in rows),
            precision=sum(r.precision for r in rows) / len(rows),
            recall=sum(r.recall for r in rows) / len(rows),
            map50=sum(r.map50 for r in rows) / len(rows),
            map5095=sum(r.map5095 for r in rows) / len(rows),
        )
    else:
        overall = ClassReport(
            name="all", images=0, instances=0,
            precision=1.0, recall=0.0, map50=0.0, map5095=0.0,
        )
    return EvalReport(overall=overall, classes=tuple(rows))


# ---------------------------------------------------------------------------
# report rendering and I/O

_HEADER = ("Class", "Images", "Instances", "Precision", "Recall", "mAP50", "mAP50-95")


def render_report(report: EvalReport) -> str:
    """Fixed-width text table, one row per class plus the `all` row."""
    lines = [
        f"{_HEADER[0]:<12} {_HEADER[1]:>8} {_HEADER[2]:>9} "
        f"{_HEADER[3]:>9} {_HEADER[4]:>7} {_HEADER[5]:>7} {_HEADER[6]:>8}"
    ]
    for row in report.rows:
        lines.append(
            f"{row.name:<12} {row.images:>8d} {row.instances:>9d} "
            f"{row.precision:>9.3f} {row.recall:>7.3f} {row.map50:>7.3f} "
            f"{row.map5095:>8.3f}"
        )
    return "\n".join(lines) + "\n"


def report_to_objs(report: EvalReport) -> list[dict]:
    return [
        {
            "class": row.name,
            "images": row.images,
            "instances": row.instances,
            "precision": row.precision,
            "recall": row.recall,
            "map50": row.map50,
            "map5095": row.map5095,
        }
        for row in report.rows
    ]


def write_report(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in report_to_objs(report):
            fh.write(json.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# identity continuity

def frame_object_matches(
    gts: list[GroundTruth], rows, iou_threshold: float = 0.5
) -> list[tuple[int, int, int]]:
    """(frame, object_id, track_id) triples from per-frame assignment.

    Each frame and class is matched one-to-one by minimum 1 - IoU cost,
    pairs below the IoU threshold discarded.
    """
    gt_by_key: dict[tuple[int, int], list[GroundTruth]] = {}
    for g in gts:
        gt_by_key.setdefault((g.frame, g.class_id), []).append(g)
    rows_by_key: dict[tuple[int, int], list] = {}
    for r in rows:
        rows_by_key.setdefault((r.frame, r.class_id), []).append(r)

    out: list[tuple[int, int, int]] = []
    for key in sorted(set(gt_by_key) & set(rows_by_key)):
        frame_gts = gt_by_key[key]
        frame_rows = rows_by_key[key]
        overlap = iou_matrix_xyxy(
            np.array([g.box.as_tuple() for g in frame_gts]),
            np.array([r.box.as_tuple() for r in frame_rows]),
        )
        cost = np.where(overlap >= iou_threshold, 1.0 - overlap, _FORBIDDEN)
        for i, j in solve_assignment(cost):
            if cost[i, j] < _FORBIDDEN:
                out.append((key[0], frame_gts[i].object_id, frame_rows[j].track_id))
    out.sort()
    return out


def object_track_ids(
    gts: list[GroundTruth], rows, iou_threshold: float = 0.5
) -> dict[int, list[int]]:
    """Distinct track ids each object was matched to, in first-seen order."""
    seen: dict[int, list[int]] = {}
    for _, object_id, track_id in frame_object_matches(gts, rows, iou_threshold):
        ids = seen.setdefault(object_id, [])
        if track_id not in ids:
            ids.append(track_id)
    return seen


def count_id_switches(
    gts: list[GroundTruth], rows, iou_threshold: float = 0.5
) -> int:
    """Times any object's matched track id changed between matched frames."""
    last: dict[int, int] = {}
    switches = 0
    for _, object_id, track_id in frame_object_matches(gts, rows, iou_threshold):
        if object_id in last and last[object_id] != track_id:
            switches += 1
        last[object_id] = track_id
    return switches
