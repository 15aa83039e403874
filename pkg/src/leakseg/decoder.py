"""Top-down multi-scale decoder emitting per-frame mask logits.

Lateral 1x1 convolutions bring the three refined maps to a common width;
the coarsest is repeatedly upsampled 2x (bilinear, half-pixel centers),
added to the next lateral and smoothed by a 3x3 convolution, and a final
3x3 prediction head emits a single-channel logit map that is resized to
the output resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .layers import Conv2d
from .tape import Tensor


@dataclass
class MaskLogits:
    logits: np.ndarray  # HxW
    prob: np.ndarray  # HxW in [0,1]


class FpnDecoder:
    """Merge {8: fine, 16: mid, 32: coarse} maps into full-resolution logits."""

    def __init__(self, channels: int, width: int, rng: np.random.Generator):
        self.width = width
        self.lateral = {s: Conv2d(channels, width, 1, rng) for s in (8, 16, 32)}
        self.smooth = {s: Conv2d(width, width, 3, rng, padding=1) for s in (8, 16)}
        self.predict = Conv2d(width, 1, 3, rng, padding=1)

    def __call__(self, maps: dict, out_hw, activations: bool = True) -> Tensor:
        """maps: {scale: (N, C, h_s, w_s)}; returns logits (N, 1, out_h, out_w)."""
        shapes = {s: maps[s].shape[2:] for s in (8, 16, 32)}
        for fine, coarse in ((8, 16), (16, 32)):
            expected = (shapes[coarse][0] * 2, shapes[coarse][1] * 2)
            if shapes[fine] != expected:
                raise ValueError(
                    f"scale {fine} shape {shapes[fine]} inconsistent with 2x of "
                    f"scale {coarse} {shapes[coarse]}"
                )
        p = self.lateral[32](maps[32])
        for s in (16, 8):
            h, w = shapes[s]
            p = tape.add(tape.bilinear_resize(p, h, w), self.lateral[s](maps[s]))
            p = self.smooth[s](p)
            if activations:
                p = tape.relu(p)
        logits = self.predict(p)
        return tape.bilinear_resize(logits, out_hw[0], out_hw[1])

    def params(self, prefix: str = "head") -> dict:
        out = {}
        for s, conv in self.lateral.items():
            out.update(conv.params(f"{prefix}.lateral.{s}"))
        for s, conv in self.smooth.items():
            out.update(conv.params(f"{prefix}.smooth.{s}"))
        out.update(self.predict.params(f"{prefix}.predict"))
        return out
