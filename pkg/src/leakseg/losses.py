"""Boundary-weighted BCE + IoU segmentation loss on the center-frame prediction.

Pixels near mask boundaries get up to 6x weight: the weight map is
1 + 5*|meanpool31(gt) - gt| with a stride-1 31x31 mean pool under symmetric
padding, so uniform regions weigh exactly 1. Both terms normalize by the
weight mass, making them invariant to scaling the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .gradcheck import fd_gradient, max_relative_error
from .tape import Tensor

WEIGHT_KERNEL = 31
WEIGHT_GAIN = 5.0
IOU_EPS = 1.0
_PROB_FLOOR = 1e-12


@dataclass
class LossBreakdown:
    total: float
    wbce: float
    wiou: float
    weight_map: np.ndarray


def _check_binary(gt: np.ndarray) -> np.ndarray:
    gt = np.asarray(gt, dtype=np.float64)
    if not np.isin(gt, (0.0, 1.0)).all():
        raise ValueError("ground truth must be strictly binary")
    return gt


def boundary_weight_map(gt: np.ndarray, kernel: int = WEIGHT_KERNEL,
                        gain: float = WEIGHT_GAIN) -> np.ndarray:
    """1 + gain * |meanpool_k(gt) - gt| via an integral image, symmetric padding."""
    gt = _check_binary(gt)
    pad = kernel // 2
    padded = np.pad(gt, pad, mode="symmetric")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    integral[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    h, w = gt.shape
    sums = (
        integral[kernel : kernel + h, kernel : kernel + w]
        - integral[:h, kernel : kernel + w]
        - integral[kernel : kernel + h, :w]
        + integral[:h, :w]
    )
    return 1.0 + gain * np.abs(sums / (kernel * kernel) - gt)


def weighted_loss_terms(prob: Tensor, gt: np.ndarray, weight: np.ndarray):
    """(wbce, wiou) Tensors for one frame; prob and gt share an HxW shape."""
    safe = tape.clip(prob, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    bce = -(gt * tape.log(safe) + (1.0 - gt) * tape.log(1.0 - safe))
    wsum = float(weight.sum())
    wbce = tape.mul(tape.sum_(tape.mul(bce, weight)), 1.0 / wsum)
    inter = tape.sum_(tape.mul(tape.mul(prob, gt), weight))
    union = tape.sum_(tape.mul(prob + gt - tape.mul(prob, gt), weight))
    wiou = 1.0 - (inter + IOU_EPS) / (union + IOU_EPS)
    return wbce, wiou


def segmentation_loss(prob: Tensor, gt: np.ndarray):
    """Mean (total, wbce, wiou) Tensors over a batch of probability maps.

    Accepts (H, W) or (N, H, W) probabilities with matching ground truth.
    """
    gt = _check_binary(gt)
    if prob.shape != gt.shape:
        raise ValueError(f"shape mismatch: prob {prob.shape} vs gt {gt.shape}")
    if prob.ndim == 2:
        prob = tape.reshape(prob, (1,) + prob.shape)
        gt = gt[None]
    wbces, wious = [], []
    for i in range(gt.shape[0]):
        weight = boundary_weight_map(gt[i])
        wbce, wiou = weighted_loss_terms(tape.getitem(prob, i), gt[i], weight)
        wbces.append(wbce)
        wious.append(wiou)
    n = float(len(wbces))
    wbce = tape.mul(tape.stack(wbces).sum(), 1.0 / n)
    wiou = tape.mul(tape.stack(wious).sum(), 1.0 / n)
    return tape.add(wbce, wiou), wbce, wiou


def loss(prob: np.ndarray, gt: np.ndarray) -> LossBreakdown:
    """Weighted BCE + IoU of one predicted probability map against binary GT."""
    prob = np.asarray(prob, dtype=np.float64)
    if prob.min() < 0.0 or prob.max() > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    gt = _check_binary(gt)
    if prob.shape != gt.shape:
        raise ValueError(f"shape mismatch: prob {prob.shape} vs gt {gt.shape}")
    weight = boundary_weight_map(gt)
    with tape.no_grad():
        wbce, wiou = weighted_loss_terms(Tensor(prob), gt, weight)
    return LossBreakdown(
        total=float(wbce) + float(wiou),
        wbce=float(wbce),
        wiou=float(wiou),
        weight_map=weight,
    )


def loss_gradcheck(prob: np.ndarray, gt: np.ndarray, h: float = 1e-7,
                   tol: float = 1e-4) -> dict:
    """Compare analytic d(total)/d(prob) against central finite differences.

    Probabilities are clamped to [1e-4, 1 - 1e-4] first so the log terms
    stay smooth around the probe points.
    """
    prob = np.clip(np.asarray(prob, dtype=np.float64), 1e-4, 1.0 - 1e-4)
    gt = _check_binary(gt)
    p = tape.parameter(prob)

    def forward():
        total, _, _ = segmentation_loss(p, gt)
        return total

    out = forward()
    out.backward()
    analytic = p.grad.copy()
    numeric = fd_gradient(forward, p, h=h)
    err = max_relative_error(analytic, numeric)
    return {"max_rel_error": err, "passed": err <= tol, "tol": tol, "h": h}
