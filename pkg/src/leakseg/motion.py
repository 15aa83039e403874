"""Inter-frame correlation volumes and granular spatial refinement.

The correlation volume scores every position of the current frame against
every position of an adjacent frame (exponentiated inner products,
normalized over the adjacent frame's coordinates, i.e. a softmax per
current-frame position). A channel-mixing 1x1 convolution of the frame
pair is then gathered through the normalized volume to pull adjacent-frame
evidence into current-frame coordinates. The group-mixing refiner splits
an expanded feature into three-channel groups, threads the first channel
of each group into the next, and recombines the remaining channels into a
multiplicative pair fused back onto the input through a residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .layers import Conv2d
from .tape import Tensor

MAX_VOLUME_POSITIONS = 4096  # guard: H'*W' above this would blow up the 4D volume
NORMALIZE_EPS = 1e-8


@dataclass
class CorrelationVolume:
    """Shifted-exponential correlation scores and their per-position softmax."""

    cv: np.ndarray  # (H, W, H, W), exp(<f_cur, f_adj> - rowmax)
    normalized: np.ndarray  # same shape, (u, v) slices summing to 1


def _inner_products(f_cur: Tensor, f_adj: Tensor) -> Tensor:
    c, h, w = f_cur.shape
    cur = tape.transpose(tape.reshape(f_cur, (c, h * w)), (1, 0))  # (HW, C)
    adj = tape.reshape(f_adj, (c, h * w))  # (C, HW)
    return tape.reshape(tape.matmul(cur, adj), (h, w, h, w))


def correlation_softmax(f_cur: Tensor, f_adj: Tensor) -> Tensor:
    """Normalized correlation volume as a Tensor, shape (H, W, H, W)."""
    if f_cur.shape != f_adj.shape:
        raise ValueError(f"shape mismatch: {f_cur.shape} vs {f_adj.shape}")
    _, h, w = f_cur.shape
    if h * w > MAX_VOLUME_POSITIONS:
        raise ValueError(f"feature map {h}x{w} too large for a 4D correlation volume")
    scores = _inner_products(f_cur, f_adj)
    flat = tape.reshape(scores, (h, w, h * w))
    return tape.reshape(tape.softmax(flat, axis=-1, eps=NORMALIZE_EPS), (h, w, h, w))


def correlation_volume(f_cur: np.ndarray, f_adj: np.ndarray) -> CorrelationVolume:
    """Numpy-facing correlation volume of two (C, H, W) feature maps."""
    f_cur = np.asarray(f_cur, dtype=np.float64)
    f_adj = np.asarray(f_adj, dtype=np.float64)
    if f_cur.shape != f_adj.shape:
        raise ValueError(f"shape mismatch: {f_cur.shape} vs {f_adj.shape}")
    if f_cur.shape[1] * f_cur.shape[2] > MAX_VOLUME_POSITIONS:
        raise ValueError(
            f"feature map {f_cur.shape[1]}x{f_cur.shape[2]} too large for a 4D correlation volume"
        )
    if not (np.isfinite(f_cur).all() and np.isfinite(f_adj).all()):
        raise ValueError("non-finite feature values")
    with tape.no_grad():
        scores = _inner_products(Tensor(f_cur), Tensor(f_adj)).data
        h, w = scores.shape[:2]
        shifted = scores - scores.reshape(h, w, -1).max(axis=-1).reshape(h, w, 1, 1)
        cv = np.exp(shifted)
        denom = cv.reshape(h, w, -1).sum(axis=-1).reshape(h, w, 1, 1) + NORMALIZE_EPS
        return CorrelationVolume(cv=cv, normalized=cv / denom)


def gather_volume(lam_out: Tensor, normalized: Tensor) -> Tensor:
    """out[c,x,y] = sum_{u,v} lam_out[c,u,v] * normalized[x,y,u,v]."""
    c, h, w = lam_out.shape
    lam_flat = tape.reshape(lam_out, (c, h * w))
    vol_flat = tape.transpose(tape.reshape(normalized, (h * w, h * w)), (1, 0))  # (UV, XY)
    return tape.reshape(tape.matmul(lam_flat, vol_flat), (c, h, w))


def aggregate_cv(f_cur: np.ndarray, f_adj: np.ndarray, normalized: np.ndarray,
                 lam_weight: np.ndarray, lam_bias: np.ndarray | None = None) -> np.ndarray:
    """Numpy-facing aggregation: 1x1-convolve the pair (2C -> C), gather through the volume."""
    f_cur = np.asarray(f_cur, dtype=np.float64)
    f_adj = np.asarray(f_adj, dtype=np.float64)
    if f_cur.shape != f_adj.shape:
        raise ValueError(f"shape mismatch: {f_cur.shape} vs {f_adj.shape}")
    with tape.no_grad():
        pair = Tensor(np.concatenate([f_cur, f_adj], axis=0)[None])
        bias = Tensor(lam_bias) if lam_bias is not None else None
        lam_out = tape.conv2d(pair, Tensor(lam_weight), bias)
        out = gather_volume(tape.getitem(lam_out, 0), Tensor(np.asarray(normalized)))
    return out.data


class GroupMixer:
    """Channel-group mixing with cross-group threading and a residual output."""

    def __init__(self, channels: int, groups: int, rng: np.random.Generator):
        if groups < 2:
            raise ValueError("group count must be >= 2")
        self.channels = channels
        self.groups = groups
        self.expand = Conv2d(channels, 3 * groups, 1, rng)
        # first group has its 3 channels; later groups receive the threaded channel
        self.group_expand = [
            Conv2d(3 if i == 0 else 4, 3, 1, rng) for i in range(groups)
        ]
        self.merge2 = Conv2d(groups, channels, 3, rng, padding=1)
        self.merge3 = Conv2d(groups, channels, 3, rng, padding=1)
        self.out = Conv2d(channels, channels, 3, rng, padding=1)

    def __call__(self, tau: Tensor) -> Tensor:
        """tau: (N, C, H, W) -> refined features of the same shape."""
        expanded = self.expand(tau)
        thread = None
        seconds, thirds = [], []
        for i in range(self.groups):
            group = tape.getitem(expanded, (slice(None), slice(3 * i, 3 * i + 3)))
            if thread is not None:
                group = tape.concat([group, thread], axis=1)
            mixed = self.group_expand[i](group)
            thread = tape.getitem(mixed, (slice(None), slice(0, 1)))
            seconds.append(tape.getitem(mixed, (slice(None), slice(1, 2))))
            thirds.append(tape.getitem(mixed, (slice(None), slice(2, 3))))
        # the last threaded channel has no successor group and is dropped
        n2 = self.merge2(tape.concat(seconds, axis=1))
        n3 = self.merge3(tape.concat(thirds, axis=1))
        return tape.add(tau, self.out(tape.mul(n2, n3)))

    def params(self, prefix: str) -> dict:
        out = {}
        out.update(self.expand.params(f"{prefix}.expand"))
        for i, conv in enumerate(self.group_expand, 1):
            out.update(conv.params(f"{prefix}.group{i}"))
        out.update(self.merge2.params(f"{prefix}.merge2"))
        out.update(self.merge3.params(f"{prefix}.merge3"))
        out.update(self.out.params(f"{prefix}.out"))
        return out


def gsa(tau: np.ndarray, mixer: GroupMixer) -> np.ndarray:
    """Numpy-facing group-mixing refinement of a (C, H, W) map."""
    with tape.no_grad():
        return tape.getitem(mixer(Tensor(np.asarray(tau, dtype=np.float64)[None])), 0).data


@dataclass
class MotionFeatures:
    phi_prev: Tensor
    phi_next: Tensor
    tau: Tensor
    gsa: Tensor


class MotionBlock:
    """One scale's motion analysis over (previous, current, next) features."""

    def __init__(self, channels: int, groups: int, rng: np.random.Generator):
        self.channels = channels
        self.lam = Conv2d(2 * channels, channels, 1, rng)
        self.tau_merge = Conv2d(3 * channels, channels, 1, rng)
        self.mixer = GroupMixer(channels, groups, rng)

    def _direction(self, f_cur: Tensor, f_adj: Tensor) -> Tensor:
        normalized = correlation_softmax(f_cur, f_adj)
        pair = tape.concat([f_cur, f_adj], axis=0)
        lam_out = tape.getitem(self.lam(tape.reshape(pair, (1,) + pair.shape)), 0)
        return gather_volume(lam_out, normalized)

    def __call__(self, f_prev: Tensor, f_cur: Tensor, f_next: Tensor) -> MotionFeatures:
        phi_prev = self._direction(f_cur, f_prev)
        phi_next = self._direction(f_cur, f_next)
        merged = tape.concat([phi_prev, phi_next, f_cur], axis=0)
        tau = tape.getitem(self.tau_merge(tape.reshape(merged, (1,) + merged.shape)), 0)
        refined = tape.getitem(self.mixer(tape.reshape(tau, (1,) + tau.shape)), 0)
        return MotionFeatures(phi_prev=phi_prev, phi_next=phi_next, tau=tau, gsa=refined)

    def params(self, prefix: str) -> dict:
        out = {}
        out.update(self.lam.params(f"{prefix}.lambda"))
        out.update(self.tau_merge.params(f"{prefix}.tau_merge"))
        out.update(self.mixer.params(f"{prefix}.gsa"))
        return out


class MotionModule:
    """Per-scale motion blocks keyed by pyramid stride."""

    def __init__(self, scales, channels: int, groups: int, rng: np.random.Generator):
        self.blocks = {s: MotionBlock(channels, groups, rng) for s in scales}

    def __call__(self, fused: dict, prev_t: int, cur_t: int, next_t: int) -> dict:
        """fused: {scale: (T, C, H, W)}; returns {scale: MotionFeatures}."""
        out = {}
        for s, stack in fused.items():
            out[s] = self.blocks[s](
                tape.getitem(stack, prev_t),
                tape.getitem(stack, cur_t),
                tape.getitem(stack, next_t),
            )
        return out

    def params(self, prefix: str = "tsm") -> dict:
        out = {}
        for s, block in self.blocks.items():
            out.update(block.params(f"{prefix}.{s}"))
        return out


def dump_correlation_slices(f_cur: np.ndarray, f_adj: np.ndarray, out_dir, tag: str):
    """Debug aid: write the center position's normalized (u, v) slice as a PNG."""
    from pathlib import Path

    from PIL import Image

    vol = correlation_volume(f_cur, f_adj).normalized
    h, w = vol.shape[:2]
    center = vol[h // 2, w // 2]
    scaled = center / center.max() if center.max() > 0 else center
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    Image.fromarray((scaled * 255).astype(np.uint8), mode="L").save(
        out_dir / f"{tag}_center_slice.png", format="PNG"
    )
