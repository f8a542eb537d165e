"""Single-class detection metrics: IoU, greedy matching, precision/recall/F1
at an operating point, and average precision over confidence sweeps.

Matching is the standard greedy protocol: predictions ranked by descending
confidence (ties keep input order) each claim their best still-unmatched
ground-truth box at or above the IoU threshold.  AP integrates the
monotone precision envelope over recall (all-points interpolation by
default, 101-point sampling available for comparison).  With one class,
AP and mAP coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox

MAP_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DEFAULT_CONF_THRESH = 0.25
DEFAULT_IOU_THRESH = 0.3

ALL_POINTS = "all-points"
POINTS_101 = "101-point"


@dataclass(frozen=True)
class Detection:
    class_id: int
    bbox: BBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of [0, 1]: {self.confidence}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union on continuous box areas."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list[tuple[int, int, float]] = field(default_factory=list)


def match_detections(
    preds: list[Detection], gts: list[BBox], iou_thresh: float
) -> MatchResult:
    """Greedy one-to-one matching of predictions to ground truth.

    Each prediction, in confidence order, takes the highest-IoU unmatched
    ground-truth box if that IoU reaches the threshold (IoU ties keep the
    lowest ground-truth index).  Unmatched predictions are false
    positives, unmatched ground truths false negatives.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    matched = [False] * len(gts)
    pairs: list[tuple[int, int, float]] = []
    for i in order:
        best_j, best_iou = -1, 0.0
        for j, g in enumerate(gts):
            if matched[j]:
                continue
            v = iou(preds[i].bbox, g)
            if v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0 and best_iou >= iou_thresh:
            matched[best_j] = True
            pairs.append((i, best_j, best_iou))
    tp = len(pairs)
    return MatchResult(tp=tp, fp=len(preds) - tp, fn=len(gts) - tp, pairs=pairs)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def pr_f1_at(
    preds: list[Detection],
    gts: list[BBox],
    iou_thresh: float = DEFAULT_IOU_THRESH,
    conf_thresh: float = DEFAULT_CONF_THRESH,
) -> tuple[float, float, float]:
    """Precision, recall, and F1 at a fixed confidence operating point.

    Zero-denominator cases return 0.
    """
    kept = [p for p in preds if p.confidence >= conf_thresh]
    m = match_detections(kept, gts, iou_thresh)
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
    return precision, recall, f1_score(precision, recall)


def _ranked_tp_flags(
    groups: list[tuple[list[Detection], list[BBox]]], iou_thresh: float
) -> tuple[np.ndarray, int]:
    """Greedy TP/FP flags in global confidence order, matched per group.

    Ties are broken by group order then input order, keeping the sweep
    deterministic.
    """
    entries = []
    n_gt = 0
    for gi, (preds, gts) in enumerate(groups):
        n_gt += len(gts)
        for pi, p in enumerate(preds):
            entries.append((-p.confidence, gi, pi))
    entries.sort()
    matched = {gi: [False] * len(gts) for gi, (_, gts) in enumerate(groups)}
    flags = np.zeros(len(entries), dtype=np.float64)
    for k, (_, gi, pi) in enumerate(entries):
        preds, gts = groups[gi]
        taken = matched[gi]
        best_j, best_iou = -1, 0.0
        for j, g in enumerate(gts):
            if taken[j]:
                continue
            v = iou(preds[pi].bbox, g)
            if v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0 and best_iou >= iou_thresh:
            taken[best_j] = True
            flags[k] = 1.0
    return flags, n_gt


def _pr_sweep(flags: np.ndarray, n_gt: int) -> tuple[np.ndarray, np.ndarray]:
    tp = np.cumsum(flags)
    fp = np.cumsum(1.0 - flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    return recall, precision


def _ap_from_flags(flags: np.ndarray, n_gt: int, interpolation: str) -> float:
    if n_gt == 0 or flags.size == 0:
        return 0.0
    recall, precision = _pr_sweep(flags, n_gt)
    if interpolation == ALL_POINTS:
        # integrate over integer TP counts and divide once, so a perfect
        # sweep yields exactly 1.0 instead of a telescoped rounding error
        mtp = np.concatenate(([0.0], np.cumsum(flags), [float(n_gt)]))
        mpre = np.concatenate(([0.0], precision, [0.0]))
        for i in range(mpre.size - 2, -1, -1):
            mpre[i] = max(mpre[i], mpre[i + 1])
        changed = np.flatnonzero(mtp[1:] != mtp[:-1])
        return float(np.sum((mtp[changed + 1] - mtp[changed]) * mpre[changed + 1]) / n_gt)
    if interpolation == POINTS_101:
        total = 0.0
        for r in np.linspace(0.0, 1.0, 101):
            at_least = precision[recall >= r]
            total += float(at_least.max()) if at_least.size else 0.0
        return total / 101.0
    raise ValueError(f"unknown interpolation: {interpolation!r}")


def average_precision(
    preds: list[Detection],
    gts: list[BBox],
    iou_thresh: float = 0.5,
    interpolation: str = ALL_POINTS,
) -> float:
    """Area under the precision-recall curve for one prediction set."""
    flags, n_gt = _ranked_tp_flags([(list(preds), list(gts))], iou_thresh)
    return _ap_from_flags(flags, n_gt, interpolation)


def _mean_ap(aps: list[float]) -> float:
    # the true mean never exceeds the max; clamp away the 1-ulp overshoot
    # that float summation of near-equal terms can introduce
    return min(float(np.mean(aps)), max(aps))


def map_suite(
    preds: list[Detection],
    gts: list[BBox],
    interpolation: str = ALL_POINTS,
) -> tuple[float, float]:
    """(AP at IoU 0.50, mean AP over IoU 0.50:0.05:0.95)."""
    aps = [average_precision(preds, gts, t, interpolation) for t in MAP_THRESHOLDS]
    return aps[0], _mean_ap(aps)


@dataclass
class EvalReport:
    """Detection metrics for one prediction set against ground truth."""

    precision: float
    recall: float
    f1: float
    map50: float
    map50_95: float
    tp: int
    fp: int
    fn: int
    conf_thresh: float
    iou_thresh: float
    ap_per_threshold: dict[float, float] = field(default_factory=dict)
    pr_samples: dict[float, list[tuple[float, float]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "map50": self.map50,
            "map50_95": self.map50_95,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
            "conf_thresh": self.conf_thresh,
            "iou_thresh": self.iou_thresh,
            "ap_per_threshold": {f"{t:.2f}": ap for t, ap in self.ap_per_threshold.items()},
            "pr_samples": {
                f"{t:.2f}": [[float(r), float(p)] for r, p in pts]
                for t, pts in self.pr_samples.items()
            },
        }


def evaluate(
    preds_by_image: dict[str, list[Detection]],
    gts_by_image: dict[str, list[BBox]],
    conf_thresh: float = DEFAULT_CONF_THRESH,
    iou_thresh: float = DEFAULT_IOU_THRESH,
    interpolation: str = ALL_POINTS,
) -> EvalReport:
    """Dataset-level report: operating-point P/R/F1 plus the mAP suite.

    Matching is always per image; the AP confidence sweep ranks
    predictions globally.  Per-image counts combine by summation.
    """
    keys = sorted(set(preds_by_image) | set(gts_by_image))
    groups = [
        (list(preds_by_image.get(k, [])), list(gts_by_image.get(k, [])))
        for k in keys
    ]
    tp = fp = fn = 0
    for preds, gts in groups:
        kept = [p for p in preds if p.confidence >= conf_thresh]
        m = match_detections(kept, gts, iou_thresh)
        tp, fp, fn = tp + m.tp, fp + m.fp, fn + m.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0

    ap_per: dict[float, float] = {}
    pr_samples: dict[float, list[tuple[float, float]]] = {}
    for t in MAP_THRESHOLDS:
        flags, n_gt = _ranked_tp_flags(groups, t)
        ap_per[t] = _ap_from_flags(flags, n_gt, interpolation)
        if n_gt and flags.size:
            rec, pre = _pr_sweep(flags, n_gt)
            pr_samples[t] = list(zip(rec.tolist(), pre.tolist()))
        else:
            pr_samples[t] = []
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        map50=ap_per[MAP_THRESHOLDS[0]],
        map50_95=_mean_ap(list(ap_per.values())),
        tp=tp,
        fp=fp,
        fn=fn,
        conf_thresh=conf_thresh,
        iou_thresh=iou_thresh,
        ap_per_threshold=ap_per,
        pr_samples=pr_samples,
    )


def report_table(report: EvalReport) -> str:
    """Aligned plain-text table with the standard metric columns."""
    header = ("Precision", "Recall", "F1", "mAP50", "mAP50-95")
    values = (
        f"{report.precision:.3f}",
        f"{report.recall:.3f}",
        f"{report.f1:.3f}",
        f"{report.map50:.3f}",
        f"{report.map50_95:.3f}",
    )
    widths = [max(len(h), len(v)) for h, v in zip(header, values)]
    line1 = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    line2 = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return f"{line1}\n{line2}\n"
