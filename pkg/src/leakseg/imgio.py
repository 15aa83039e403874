"""PNG reading/writing and deterministic numpy resampling helpers."""

from __future__ import annotations

import numpy as np
from PIL import Image


def _axis_coords(src: int, dst: int) -> np.ndarray:
    """Half-pixel source coordinates for resampling one axis."""
    return np.clip((np.arange(dst) + 0.5) * (src / dst) - 0.5, 0.0, src - 1.0)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an HxW or HxWxC float array, half-pixel centers."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = _axis_coords(h, out_h)
    xs = _axis_coords(w, out_w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    if img.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def resize_nearest(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize, half-pixel centers."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = np.clip(np.floor((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.intp), 0, h - 1)
    xs = np.clip(np.floor((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.intp), 0, w - 1)
    return img[ys][:, xs]


def read_image(path, resolution=None) -> np.ndarray:
    """Load an RGB image into an HxWx3 float64 array in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    if resolution is not None:
        arr = np.clip(resize_bilinear(arr, resolution[0], resolution[1]), 0.0, 1.0)
    return arr


def read_mask(path, resolution=None) -> np.ndarray:
    """Load a grayscale mask into an HxW {0,1} uint8 array (threshold 0.5)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    if resolution is not None:
        arr = resize_nearest(arr, resolution[0], resolution[1])
    return (arr > 0.5).astype(np.uint8)


def write_image(path, img: np.ndarray):
    """Write an HxWx3 [0,1] float array as an 8-bit RGB PNG."""
    data = np.clip(np.asarray(img) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def write_mask(path, mask: np.ndarray):
    """Write a {0,1} mask as an 8-bit single-channel PNG with values {0,255}."""
    data = (np.asarray(mask).astype(np.uint8) * 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")
