"""Region similarity (J), contour accuracy (F) and their aggregation protocols.

Scores are on the 0-100 percent scale. A frame whose ground truth and
prediction are both empty scores 100 on both metrics: an all-black mask on
a non-leak frame is the correct output, not a vacuous one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROTOCOLS = ("unified", "per_video_confusion", "fold_weighted")

WEIGHT_TOLERANCE = 1e-4


@dataclass
class FrameResult:
    video_id: str
    frame_index: int
    j: float
    f: float
    tp: int
    fp: int
    fn: int

    @property
    def jf(self) -> float:
        return 0.5 * (self.j + self.f)


@dataclass
class VideoResult:
    video_id: str
    j: float
    f: float
    jf: float


@dataclass
class FoldResult:
    fold: int
    weight: float
    j: float
    f: float
    jf: float


@dataclass
class EvalReport:
    protocol: str
    overall: tuple  # (J, F, J&F)
    per_frame: list = field(default_factory=list)
    per_video: list = field(default_factory=list)
    per_fold: list = field(default_factory=list)


def _binary_pair(pred: np.ndarray, gt: np.ndarray):
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    return pred.astype(bool), gt.astype(bool)


def jaccard(pred: np.ndarray, gt: np.ndarray) -> float:
    """Intersection over union in percent; both-empty scores 100."""
    pred, gt = _binary_pair(pred, gt)
    union = np.logical_or(pred, gt).sum()
    if union == 0:
        return 100.0
    return 100.0 * np.logical_and(pred, gt).sum() / union


def boundary_tolerance(shape) -> int:
    """Pixel radius for boundary matching: ceil(0.0075 * image diagonal)."""
    h, w = shape
    return math.ceil(0.0075 * math.hypot(h, w))


def mask_boundary(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a background 4-neighbor; the border counts as background."""
    mask = np.asarray(mask).astype(bool)
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~interior


def _disk_offsets(radius: int):
    offs = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    ]
    return offs


def disk_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation by a Euclidean disk of the given pixel radius."""
    mask = np.asarray(mask).astype(bool)
    if radius <= 0:
        return mask.copy()
    h, w = mask.shape
    padded = np.zeros((h + 2 * radius, w + 2 * radius), dtype=bool)
    out = np.zeros_like(padded)
    padded[radius : radius + h, radius : radius + w] = mask
    for dy, dx in _disk_offsets(radius):
        np.logical_or(out, np.roll(np.roll(padded, dy, axis=0), dx, axis=1), out=out)
    return out[radius : radius + h, radius : radius + w]


def boundary_f(pred: np.ndarray, gt: np.ndarray, tolerance: int | None = None) -> float:
    """Boundary F-measure in percent with disk-tolerant matching.

    Precision counts predicted boundary pixels within `tolerance` of the
    ground-truth boundary, recall the converse; both-empty masks score 100.
    """
    pred, gt = _binary_pair(pred, gt)
    pred_any, gt_any = pred.any(), gt.any()
    if not pred_any and not gt_any:
        return 100.0
    if pred_any != gt_any:
        return 0.0
    radius = boundary_tolerance(pred.shape) if tolerance is None else tolerance
    pb = mask_boundary(pred)
    gb = mask_boundary(gt)
    precision = (pb & disk_dilate(gb, radius)).sum() / pb.sum()
    recall = (gb & disk_dilate(pb, radius)).sum() / gb.sum()
    if precision + recall == 0.0:
        return 0.0
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def evaluate_frame(pred: np.ndarray, gt: np.ndarray, video_id: str, frame_index: int) -> FrameResult:
    pred_b, gt_b = _binary_pair(pred, gt)
    return FrameResult(
        video_id=video_id,
        frame_index=frame_index,
        j=jaccard(pred_b, gt_b),
        f=boundary_f(pred_b, gt_b),
        tp=int(np.logical_and(pred_b, gt_b).sum()),
        fp=int(np.logical_and(pred_b, ~gt_b).sum()),
        fn=int(np.logical_and(~pred_b, gt_b).sum()),
    )


def fold_weighted_average(scores, weights) -> float:
    """Weighted mean of fold-level scores; weights must sum to 1 +- 1e-4."""
    scores = np.asarray(scores, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if scores.shape != weights.shape:
        raise ValueError("scores and weights must align")
    total = weights.sum()
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ValueError(f"fold weights sum to {total:.6f}, expected 1 +- {WEIGHT_TOLERANCE}")
    return float((scores * weights).sum())


def _video_groups(results):
    groups: dict[str, list[FrameResult]] = {}
    for r in results:
        groups.setdefault(r.video_id, []).append(r)
    return groups


def _unified_scores(results) -> tuple:
    j = float(np.mean([r.j for r in results]))
    f = float(np.mean([r.f for r in results]))
    return j, f, 0.5 * (j + f)


def aggregate(results, protocol: str = "unified", folds=None) -> EvalReport:
    """Combine per-frame results under one of the three reporting protocols.

    unified            -- mean J and F over all frames.
    per_video_confusion -- J per video from accumulated TP/FP/FN counts,
                           F as the within-video frame mean, then an
                           unweighted mean over videos.
    fold_weighted      -- unified scores per fold, combined with the fold
                           weights carried by `folds` (list of objects with
                           .videos and .weight).
    """
    results = list(results)
    if not results:
        raise ValueError("no frame results to aggregate")
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")

    groups = _video_groups(results)
    per_video = []
    if protocol == "per_video_confusion":
        for vid in sorted(groups):
            rs = groups[vid]
            tp = sum(r.tp for r in rs)
            fp = sum(r.fp for r in rs)
            fn = sum(r.fn for r in rs)
            j = 100.0 if tp + fp + fn == 0 else 100.0 * tp / (tp + fp + fn)
            f = float(np.mean([r.f for r in rs]))
            per_video.append(VideoResult(vid, j, f, 0.5 * (j + f)))
    else:
        for vid in sorted(groups):
            rs = groups[vid]
            j = float(np.mean([r.j for r in rs]))
            f = float(np.mean([r.f for r in rs]))
            per_video.append(VideoResult(vid, j, f, 0.5 * (j + f)))

    per_fold = []
    if protocol == "unified":
        overall = _unified_scores(results)
    elif protocol == "per_video_confusion":
        j = float(np.mean([v.j for v in per_video]))
        f = float(np.mean([v.f for v in per_video]))
        overall = (j, f, 0.5 * (j + f))
    else:
        if not folds:
            raise ValueError("fold_weighted aggregation requires folds with weights")
        weights = [fold.weight for fold in folds]
        if abs(sum(weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"fold weights sum to {sum(weights):.6f}, expected 1 +- {WEIGHT_TOLERANCE}")
        fold_scores = []
        for idx, fold in enumerate(folds):
            members = [r for r in results if r.video_id in set(fold.videos)]
            if not members:
                raise ValueError(f"fold {idx} has no evaluated frames")
            j, f, jf = _unified_scores(members)
            per_fold.append(FoldResult(idx + 1, fold.weight, j, f, jf))
            fold_scores.append((j, f, jf))
        j = fold_weighted_average([s[0] for s in fold_scores], weights)
        f = fold_weighted_average([s[1] for s in fold_scores], weights)
        jf = fold_weighted_average([s[2] for s in fold_scores], weights)
        overall = (j, f, jf)

    return EvalReport(
        protocol=protocol,
        overall=overall,
        per_frame=results,
        per_video=per_video,
        per_fold=per_fold,
    )


def report_to_text(report: EvalReport) -> str:
    lines = [f"protocol: {report.protocol}"]
    j, f, jf = report.overall
    lines.append(f"overall   J={j:.2f}  F={f:.2f}  J&F={jf:.2f}")
    for v in report.per_video:
        lines.append(f"video {v.video_id:<16} J={v.j:.2f}  F={v.f:.2f}  J&F={v.jf:.2f}")
    for fr in report.per_fold:
        lines.append(
            f"fold {fr.fold}  weight={fr.weight:.4f}  J={fr.j:.2f}  F={fr.f:.2f}  J&F={fr.jf:.2f}"
        )
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    j, f, jf = report.overall
    return {
        "protocol": report.protocol,
        "overall": {"J": j, "F": f, "J&F": jf},
        "per_video": [
            {"video_id": v.video_id, "J": v.j, "F": v.f, "J&F": v.jf} for v in report.per_video
        ],
        "per_fold": [
            {"fold": fr.fold, "weight": fr.weight, "J": fr.j, "F": fr.f, "J&F": fr.jf}
            for fr in report.per_fold
        ],
        "per_frame": [
            {"video_id": r.video_id, "frame_index": r.frame_index, "J": r.j, "F": r.f}
            for r in report.per_frame
        ],
    }
