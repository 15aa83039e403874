"""Fusing pooled prompt representations into the per-scale vision features.

Per scale: vision features are projected into the text channel space,
matched against every prompt representation by dot product, and the
resulting per-prompt similarity field is projected back to the vision
width. The fused term is added to the raw vision feature (residual) so an
uninformative text signal degrades gracefully to pure vision features.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .layers import Linear
from .tape import Tensor


class FusionBlock:
    """One scale's fusion: project, similarity against prompts, project back."""

    def __init__(self, c_v: int, c_t: int, prompt_count: int, rng: np.random.Generator,
                 residual: bool = True):
        if prompt_count < 1:
            raise ValueError("prompt_count must be >= 1")
        self.c_v = c_v
        self.c_t = c_t
        self.prompt_count = prompt_count
        self.residual = residual
        self.proj_v = Linear(c_v, c_t, rng)
        self.phi = Linear(prompt_count, c_v, rng)

    def __call__(self, stack: Tensor, f_t: Tensor) -> Tensor:
        """stack: (T, C_v, H, W) vision features; f_t: (P, C_t) text pooled.

        The fusion is positionwise, so the leading axis may equally be a
        flattened batch of frames.
        """
        t, c, h, w = stack.shape
        if c != self.c_v:
            raise ValueError(f"vision width {c} != configured {self.c_v}")
        if f_t.shape != (self.prompt_count, self.c_t):
            raise ValueError(
                f"text encoding shape {f_t.shape} incompatible with "
                f"(P={self.prompt_count}, C_t={self.c_t})"
            )
        flat = tape.reshape(tape.transpose(stack, (0, 2, 3, 1)), (t * h * w, c))
        f_v = self.proj_v(flat)  # (THW, C_t)
        sim = tape.matmul(f_v, tape.transpose(f_t, (1, 0)))  # (THW, P)
        fused = self.phi(sim)  # (THW, C_v)
        fused = tape.transpose(tape.reshape(fused, (t, h, w, c)), (0, 3, 1, 2))
        return tape.add(stack, fused) if self.residual else fused

    def params(self, prefix: str) -> dict:
        out = {}
        out.update(self.proj_v.params(f"{prefix}.proj_v"))
        out.update(self.phi.params(f"{prefix}.phi"))
        return out


class FusionModule:
    """Per-scale fusion blocks keyed by pyramid stride."""

    def __init__(self, scales, c_v: int, c_t: int, prompt_count: int,
                 rng: np.random.Generator, residual: bool = True):
        self.blocks = {
            s: FusionBlock(c_v, c_t, prompt_count, rng, residual=residual) for s in scales
        }

    def __call__(self, stacks: dict, f_t: Tensor) -> dict:
        return {s: self.blocks[s](stack, f_t) for s, stack in stacks.items()}

    def params(self, prefix: str = "vlf") -> dict:
        out = {}
        for s, block in self.blocks.items():
            out.update(block.params(f"{prefix}.{s}"))
        return out


def vlf_bypass(stacks: dict) -> dict:
    """Identity pass-through of the stacked vision features (no-text ablation)."""
    return dict(stacks)


def stack_pyramids(pyramids) -> dict:
    """Stack per-frame {scale: (C,H,W)} pyramids into {scale: (T,C,H,W)}."""
    scales = pyramids[0].keys()
    return {s: tape.stack([p[s] for p in pyramids], axis=0) for s in scales}
