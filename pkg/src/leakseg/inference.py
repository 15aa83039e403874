"""Inference over datasets, prediction evaluation, and the kernel sweep."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import imgio, metrics
from .config import RunConfig
from .data import Dataset, clip_frame_positions
from .encoders import tokenize
from .model import SegmentationModel
from .postprocess import binarize, opening


def _frame_probs(model: SegmentationModel, dataset: Dataset, cfg: RunConfig, frames=None,
                 debug_correlation=None):
    """Yield (video_id, frame_index, prob map, gt mask) for requested frames."""
    if tuple(model.resolution) != tuple(cfg.resolution):
        raise ValueError(
            f"checkpoint resolution {model.resolution} != configured {cfg.resolution}"
        )
    prompt_set = tokenize(cfg.prompts) if model.use_vlf else None
    wanted = None
    if frames is not None:
        wanted = {}
        for vid, idx in frames:
            wanted.setdefault(vid, set()).add(idx)
    dumped = set()
    for video in dataset.videos:
        if wanted is not None and video.video_id not in wanted:
            continue
        n = len(video)
        for pos, idx in enumerate(video.indices):
            if wanted is not None and idx not in wanted[video.video_id]:
                continue
            positions = clip_frame_positions(n, pos, cfg.clip_length, cfg.center_index)
            frames_loaded = [dataset.load_frame(video.video_id, video.indices[p]) for p in positions]
            clip = np.stack([f.image for f in frames_loaded])
            if debug_correlation is not None and video.video_id not in dumped:
                _dump_debug_correlation(model, clip, cfg, debug_correlation, video.video_id)
                dumped.add(video.video_id)
            out = model.infer_prob(clip, prompt_set, cfg.center_index)
            yield video.video_id, idx, out.prob, frames_loaded[cfg.center_index].mask


def _dump_debug_correlation(model, clip, cfg, out_dir, video_id):
    from . import tape
    from .motion import dump_correlation_slices

    with tape.no_grad():
        pyramids = model.vision.encode_frames(clip)
    prev_t = max(cfg.center_index - 1, 0)
    for scale, feats in pyramids.items():
        dump_correlation_slices(
            feats.data[cfg.center_index], feats.data[prev_t], out_dir,
            f"{video_id}_s{scale}",
        )


def infer(model: SegmentationModel, dataset: Dataset, cfg: RunConfig, out_dir,
          frames=None, debug_correlation=None) -> Path:
    """Write one 0/255 PNG mask per frame, named after the input frames."""
    out_dir = Path(out_dir)
    for vid, idx, prob, _ in _frame_probs(model, dataset, cfg, frames, debug_correlation):
        mask = binarize(prob, cfg.threshold)
        if cfg.postproc:
            mask = opening(mask, cfg.kernel)
        vdir = out_dir / vid / "masks"
        vdir.mkdir(parents=True, exist_ok=True)
        imgio.write_mask(vdir / f"{idx:06d}.png", mask)
    return out_dir


def evaluate_predictions(pred_dir, dataset: Dataset, frames=None) -> list:
    """Frame-level metric results for stored predictions against dataset GT."""
    pred_dir = Path(pred_dir)
    wanted = list(frames) if frames is not None else list(dataset.frames())
    results = []
    missing = []
    for vid, idx in wanted:
        path = pred_dir / vid / "masks" / f"{idx:06d}.png"
        if not path.is_file():
            missing.append(f"{vid}/{idx:06d}")
            continue
        pred = imgio.read_mask(path, dataset.resolution)
        gt = dataset.load_frame(vid, idx).mask
        if gt is None:
            raise ValueError(f"{vid}/{idx}: dataset frame has no ground-truth mask")
        results.append(metrics.evaluate_frame(pred, gt, vid, idx))
    if missing:
        raise FileNotFoundError(
            f"{len(missing)} prediction masks missing under {pred_dir}: "
            + ", ".join(missing[:10])
        )
    return results


def evaluate_model(model: SegmentationModel, dataset: Dataset, cfg: RunConfig,
                   frames=None, postproc=None, kernel=None) -> list:
    """Run inference in memory and score each frame against dataset GT."""
    use_post = cfg.postproc if postproc is None else postproc
    k = cfg.kernel if kernel is None else kernel
    results = []
    for vid, idx, prob, gt in _frame_probs(model, dataset, cfg, frames):
        if gt is None:
            raise ValueError(f"{vid}/{idx}: dataset frame has no ground-truth mask")
        mask = binarize(prob, cfg.threshold)
        if use_post:
            mask = opening(mask, k)
        results.append(metrics.evaluate_frame(mask, gt, vid, idx))
    return results


def sweep_kernel(model: SegmentationModel, dataset: Dataset, cfg: RunConfig,
                 kernels, frames=None) -> list:
    """Evaluate opening kernels on shared raw predictions.

    Returns [(kernel, J, F, J&F)] rows, deduplicating repeated kernels;
    kernel 1 is the identity and matches the no-postprocessing scores.
    """
    raw = [
        (vid, idx, binarize(prob, cfg.threshold), gt)
        for vid, idx, prob, gt in _frame_probs(model, dataset, cfg, frames)
    ]
    rows = []
    seen = set()
    for k in kernels:
        if k in seen:
            continue
        seen.add(k)
        results = [
            metrics.evaluate_frame(opening(mask, k), gt, vid, idx)
            for vid, idx, mask, gt in raw
        ]
        report = metrics.aggregate(results, "unified")
        j, f, jf = report.overall
        rows.append((k, j, f, jf))
    return rows


def write_report(report: metrics.EvalReport, out_prefix) -> tuple:
    """Write <prefix>.txt (tabular) and <prefix>.json (full tree)."""
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    txt = out_prefix.with_suffix(".txt")
    js = out_prefix.with_suffix(".json")
    txt.write_text(metrics.report_to_text(report))
    js.write_text(json.dumps(metrics.report_to_dict(report), indent=2) + "\n")
    return txt, js
