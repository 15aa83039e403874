"""Binarization and morphological opening of predicted masks."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def binarize(prob: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold probabilities to a {0,1} mask; strictly greater-than."""
    prob = np.asarray(prob)
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (prob > threshold).astype(np.uint8)


def _check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected a 2D mask, got shape {mask.shape}")
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask must be strictly binary")
    return mask.astype(np.uint8)


def _windows(mask: np.ndarray, kernel: int, fill: int) -> np.ndarray:
    pad = kernel // 2
    padded = np.pad(mask, pad, constant_values=fill)
    return sliding_window_view(padded, (kernel, kernel))


def erode(mask: np.ndarray, kernel: int) -> np.ndarray:
    """Erosion by a kernel x kernel block of ones; outside the image counts as 0."""
    mask = _check_mask(mask)
    if kernel == 1:
        return mask.copy()
    win = _windows(mask, kernel, fill=0)
    return win.min(axis=(2, 3)).astype(np.uint8)


def dilate(mask: np.ndarray, kernel: int) -> np.ndarray:
    """Dilation by a kernel x kernel block of ones."""
    mask = _check_mask(mask)
    if kernel == 1:
        return mask.copy()
    win = _windows(mask, kernel, fill=0)
    return win.max(axis=(2, 3)).astype(np.uint8)


def opening(mask: np.ndarray, kernel: int) -> np.ndarray:
    """Erosion followed by dilation with a square structuring element.

    Removes connected structure that cannot contain a full kernel x kernel
    block while leaving larger regions intact; kernel=1 is the identity.
    """
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"kernel must be odd and >= 1, got {kernel}")
    return dilate(erode(mask, kernel), kernel)
