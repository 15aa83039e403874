"""Training loop: Adam on the weighted BCE+IoU loss of center-frame predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tape
from .config import RunConfig
from .data import Dataset, DatasetSplit, clip_frame_positions
from .encoders import tokenize
from .layers import Adam
from .losses import segmentation_loss
from .model import SegmentationModel
from .tape import sigmoid


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainResult:
    checkpoint: Path  # best-by-validation checkpoint
    last_checkpoint: Path
    log_path: Path
    steps: int
    epoch_losses: list
    best_epoch: int


def _load_clip_batch(dataset: Dataset, items, cfg: RunConfig):
    """Stack (B, T, H, W, 3) clip frames and (B, H, W) center masks."""
    clips, masks = [], []
    for vid, idx in items:
        video = dataset.video(vid)
        pos = video.indices.index(idx)
        positions = clip_frame_positions(len(video), pos, cfg.clip_length, cfg.center_index)
        frames = [dataset.load_frame(vid, video.indices[p]) for p in positions]
        clips.append(np.stack([f.image for f in frames]))
        center = frames[cfg.center_index]
        if center.mask is None:
            raise TrainingError(f"{vid}/{idx}: training frame has no ground-truth mask")
        masks.append(center.mask.astype(np.float64))
    return np.stack(clips), np.stack(masks)


def _validation_holdout(train_items, fraction: float, rng: np.random.Generator):
    """Deterministic held-out slice of the training frames for model selection."""
    items = list(train_items)
    if len(items) < 2 or fraction <= 0.0:
        return items, []
    order = rng.permutation(len(items))
    n_val = max(1, int(round(fraction * len(items))))
    if n_val >= len(items):
        n_val = len(items) - 1
    val_idx = set(order[:n_val].tolist())
    fit = [items[i] for i in range(len(items)) if i not in val_idx]
    val = [items[i] for i in range(len(items)) if i in val_idx]
    return fit, val


def _batch_loss(model: SegmentationModel, clips, masks, prompt_set, cfg: RunConfig):
    logits = model.forward_batch(clips, prompt_set, cfg.center_index)
    b, _, h, w = logits.shape
    prob = sigmoid(logits).reshape(b, h, w)
    return segmentation_loss(prob, masks)


def train(cfg: RunConfig, dataset: Dataset, split: DatasetSplit, out_dir,
          max_steps: int | None = None) -> TrainResult:
    """Optimize a fresh model on split.train; returns checkpoint paths.

    One log line per optimization step (epoch, step, lr, loss terms).
    Checkpoints are written each epoch; the best validation loss is kept
    separately. `max_steps` caps total optimizer steps for smoke runs.
    """
    cfg.validate()
    if not split.train:
        raise TrainingError("training split is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "training_log.txt"
    best_path = out_dir / "best.npz"
    last_path = out_dir / "last.npz"

    rng = np.random.default_rng(cfg.seed)
    model = SegmentationModel(
        resolution=cfg.resolution, c_v=cfg.c_v, c_t=cfg.c_t, groups=cfg.groups,
        decoder_width=cfg.decoder_width, prompt_count=len(cfg.prompts),
        use_vlf=cfg.use_vlf, encoder=cfg.encoder, seed=cfg.seed,
    )
    prompt_set = tokenize(cfg.prompts) if cfg.use_vlf else None
    fit_items, val_items = _validation_holdout(split.train, cfg.validation_fraction, rng)
    optimizer = Adam(model.params(), lr=cfg.lr_initial)
    steps_per_epoch = max(1, math.ceil(len(fit_items) / cfg.batch_size))

    best_val = math.inf
    best_epoch = 0
    total_steps = 0
    epoch_losses = []
    with open(log_path, "w") as log:
        for epoch in range(1, cfg.epochs + 1):
            lr = cfg.learning_rate(epoch)
            optimizer.lr = lr
            order = rng.permutation(len(fit_items))
            losses = []
            for step in range(steps_per_epoch):
                picks = order[step * cfg.batch_size : (step + 1) * cfg.batch_size]
                if picks.size == 0:
                    break
                items = [fit_items[i] for i in picks]
                clips, masks = _load_clip_batch(dataset, items, cfg)
                optimizer.zero_grad()
                total, wbce, wiou = _batch_loss(model, clips, masks, prompt_set, cfg)
                if not np.isfinite(float(total)):
                    dump = out_dir / "diverged.npz"
                    model.save(dump, {"failed_epoch": epoch, "failed_step": step})
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch} step {step}; state dumped to {dump}"
                    )
                total.backward()
                optimizer.step()
                total_steps += 1
                losses.append(float(total))
                log.write(
                    f"epoch={epoch} step={step + 1} lr={lr:.6g} "
                    f"total={float(total):.6f} wbce={float(wbce):.6f} wiou={float(wiou):.6f}\n"
                )
                if max_steps is not None and total_steps >= max_steps:
                    break
            epoch_losses.append(float(np.mean(losses)) if losses else math.nan)

            if val_items:
                val_losses = []
                for i in range(0, len(val_items), cfg.batch_size):
                    clips, masks = _load_clip_batch(dataset, val_items[i : i + cfg.batch_size], cfg)
                    with tape.no_grad():
                        total, _, _ = _batch_loss(model, clips, masks, prompt_set, cfg)
                    val_losses.append(float(total))
                val_loss = float(np.mean(val_losses))
            else:
                val_loss = epoch_losses[-1]
            model.save(last_path, {"epoch": epoch, "val_loss": val_loss})
            if val_loss < best_val:
                best_val = val_loss
                best_epoch = epoch
                model.save(best_path, {"epoch": epoch, "val_loss": val_loss})
            if max_steps is not None and total_steps >= max_steps:
                break
    if not best_path.exists():
        model.save(best_path, {"epoch": 0, "val_loss": math.inf})
    return TrainResult(
        checkpoint=best_path,
        last_checkpoint=last_path,
        log_path=log_path,
        steps=total_steps,
        epoch_losses=epoch_losses,
        best_epoch=best_epoch,
    )
