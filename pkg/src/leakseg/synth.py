"""Deterministic synthetic gas-clip generator for desk-scale training and tests.

Leak videos composite Gaussian-blob plumes (seeded random walk, growing
spread) as a brightness increase over a smoothly drifting noise background;
the ground truth is the region where plume alpha exceeds 0.3. Non-leak
videos keep the moving background, optionally with small transient specks,
and carry all-zero masks.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imgio

MASK_ALPHA_THRESHOLD = 0.3


@dataclass
class SynthSpec:
    seed: int = 0
    n_videos: int = 4
    frames_per_video: int = 8
    resolution: tuple = (64, 64)
    leak_probability: float = 1.0
    blob_count: tuple = (1, 2)  # inclusive range of plumes per leak video
    drift_step: float = 1.2  # random-walk step of each plume center, px/frame
    growth_rate: float = 0.4  # spread increase per frame, px
    distractors: bool = True  # transient specks in non-leak videos


def _smooth_field(rng: np.random.Generator, h: int, w: int, cells: int = 5) -> np.ndarray:
    """Low-resolution noise upsampled to (h, w); values roughly in [-1, 1]."""
    coarse = rng.uniform(-1.0, 1.0, size=(cells, cells))
    return imgio.resize_bilinear(coarse, h, w)


def _gaussian_blob(h: int, w: int, cy: float, cx: float, sigma: float, amp: float) -> np.ndarray:
    yy = np.arange(h)[:, None] - cy
    xx = np.arange(w)[None, :] - cx
    return amp * np.exp(-(yy * yy + xx * xx) / (2.0 * sigma * sigma))


def _video_frames(spec: SynthSpec, rng: np.random.Generator, leak: bool):
    """Yield (image, mask) pairs for one video."""
    h, w = spec.resolution
    base = rng.uniform(0.2, 0.35)
    f1 = _smooth_field(rng, h, w)
    f2 = _smooth_field(rng, h, w)
    flicker = rng.uniform(-0.01, 0.01, size=spec.frames_per_video)

    plumes = []
    if leak:
        count = int(rng.integers(spec.blob_count[0], spec.blob_count[1] + 1))
        for _ in range(count):
            plumes.append(
                {
                    "pos": np.array(
                        [rng.uniform(0.3 * h, 0.7 * h), rng.uniform(0.3 * w, 0.7 * w)]
                    ),
                    "sigma": rng.uniform(4.5, 6.0),
                    "amp": rng.uniform(0.75, 0.9),
                }
            )

    # transient plume-like specks, persisting a few frames but far smaller
    # than any true plume (alpha > 0.3 only over a handful of pixels)
    specks = []
    if not leak and spec.distractors:
        for _ in range(int(rng.integers(2, 5))):
            specks.append(
                {
                    "pos": (rng.uniform(6, h - 6), rng.uniform(6, w - 6)),
                    "start": int(rng.integers(0, max(spec.frames_per_video - 2, 1))),
                    "life": int(rng.integers(2, 4)),
                    "sigma": rng.uniform(1.6, 2.4),
                    "amp": rng.uniform(0.75, 0.95),
                }
            )

    for t in range(spec.frames_per_video):
        denom = max(spec.frames_per_video - 1, 1)
        mix = 0.5 * t / denom
        bg = base + 0.05 * ((1.0 - mix) * f1 + mix * f2) + flicker[t]
        bg = np.clip(bg, 0.0, 1.0)

        alpha = np.zeros((h, w))
        for p in plumes:
            sigma = p["sigma"] + spec.growth_rate * t
            alpha += _gaussian_blob(h, w, p["pos"][0], p["pos"][1], sigma, p["amp"])
            p["pos"] += rng.normal(0.0, spec.drift_step, size=2)
        speck_alpha = np.zeros((h, w))
        for s in specks:
            if s["start"] <= t < s["start"] + s["life"]:
                speck_alpha += _gaussian_blob(h, w, s["pos"][0], s["pos"][1], s["sigma"], s["amp"])
        alpha = np.clip(alpha, 0.0, 1.0)
        speck_alpha = np.clip(speck_alpha, 0.0, 1.0)

        bright = np.clip(bg + (alpha + speck_alpha) * (1.0 - bg) * 0.95, 0.0, 1.0)
        image = np.repeat(bright[:, :, None], 3, axis=2)
        mask = (alpha > MASK_ALPHA_THRESHOLD).astype(np.uint8)
        yield image, mask


def synth_generate(spec: SynthSpec, out_dir) -> Path:
    """Write a synthetic dataset in the ingestion layout; returns the root.

    Identical specs produce byte-identical directories.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    for v in range(spec.n_videos):
        leak = bool(rng.random() < spec.leak_probability)
        vdir = out / f"video_{v:02d}"
        (vdir / "frames").mkdir(parents=True, exist_ok=True)
        (vdir / "masks").mkdir(parents=True, exist_ok=True)
        for t, (image, mask) in enumerate(_video_frames(spec, rng, leak)):
            imgio.write_image(vdir / "frames" / f"{t:06d}.png", image)
            imgio.write_mask(vdir / "masks" / f"{t:06d}.png", mask)
    return out
