"""Central finite-difference comparison helpers for analytic gradients."""

from __future__ import annotations

import numpy as np

from . import tape
from .tape import Tensor


def fd_gradient(forward, tensor: Tensor, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar `forward()` w.r.t. `tensor`, in place."""
    flat = tensor.data.ravel()
    grad = np.zeros_like(flat)
    with tape.no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(forward())
            flat[i] = orig - h
            fm = float(forward())
            flat[i] = orig
            grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(tensor.data.shape)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """max |a - n| / max(|a|, |n|, floor) over all coordinates."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check(forward, tensors: dict, h: float = 1e-6, tol: float = 1e-3) -> dict:
    """Compare analytic and FD gradients of a scalar `forward()`.

    `tensors` maps names to requires_grad Tensors that `forward` reads.
    Returns a report with per-tensor max relative errors and a pass flag.
    """
    for t in tensors.values():
        t.grad = None
    out = forward()
    out.backward()
    errors = {}
    for name, t in tensors.items():
        if t.grad is None:
            raise AssertionError(f"no gradient reached tensor {name!r}")
        analytic = t.grad.copy()
        numeric = fd_gradient(forward, t, h=h)
        errors[name] = max_relative_error(analytic, numeric)
    worst = max(errors.values())
    return {"errors": errors, "max_error": worst, "passed": worst <= tol, "tol": tol, "h": h}
