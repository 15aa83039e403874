"""Parameterized building blocks, the Adam optimizer and checkpoint archives."""

from __future__ import annotations

import json

import numpy as np

from . import tape
from .tape import Tensor

CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def _uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Linear:
    """y = x @ weight + bias, weight shaped (fan_in, fan_out)."""

    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = tape.parameter(_uniform_init(rng, (fan_in, fan_out), fan_in))
        self.bias = tape.parameter(np.zeros(fan_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = tape.matmul(x, self.weight)
        return tape.add(out, self.bias) if self.bias is not None else out

    def params(self, prefix: str) -> dict:
        out = {f"{prefix}.weight": self.weight}
        if self.bias is not None:
            out[f"{prefix}.bias"] = self.bias
        return out


class Conv2d:
    """Square-kernel 2D convolution over NCHW tensors."""

    def __init__(self, cin: int, cout: int, kernel: int, rng: np.random.Generator,
                 stride: int = 1, padding: int = 0, bias: bool = True):
        fan_in = cin * kernel * kernel
        self.weight = tape.parameter(_uniform_init(rng, (cout, cin, kernel, kernel), fan_in))
        self.bias = tape.parameter(np.zeros(cout)) if bias else None
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return tape.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)

    def params(self, prefix: str) -> dict:
        out = {f"{prefix}.weight": self.weight}
        if self.bias is not None:
            out[f"{prefix}.bias"] = self.bias
        return out


class Embedding:
    def __init__(self, count: int, dim: int, rng: np.random.Generator):
        self.weight = tape.parameter(rng.normal(0.0, 0.02, size=(count, dim)))

    def __call__(self, ids: np.ndarray) -> Tensor:
        return tape.take_rows(self.weight, ids)

    def params(self, prefix: str) -> dict:
        return {f"{prefix}.weight": self.weight}


class Adam:
    """Adaptive moment estimation without weight decay."""

    def __init__(self, params: dict, lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self._m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for key, p in self.params.items():
            if p.grad is None:
                continue
            m = self._m[key]
            v = self._v[key]
            m *= b1
            m += (1.0 - b1) * p.grad
            v *= b2
            v += (1.0 - b2) * p.grad * p.grad
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def save_checkpoint(path, params: dict, meta: dict):
    """Write a single .npz archive of named arrays plus a JSON metadata blob."""
    meta = dict(meta)
    meta["version"] = CHECKPOINT_VERSION
    arrays = {name: p.data for name, p in params.items()}
    arrays["__meta__"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Return (params: name -> ndarray, meta: dict); verifies the version field."""
    with np.load(path) as archive:
        if "__meta__" not in archive:
            raise CheckpointError(f"{path}: not a checkpoint archive (missing metadata)")
        meta = json.loads(archive["__meta__"].tobytes().decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: checkpoint version {meta.get('version')} != supported {CHECKPOINT_VERSION}"
            )
        params = {k: archive[k] for k in archive.files if k != "__meta__"}
    return params, meta


def assign_params(params: dict, arrays: dict):
    """Load array values into an existing parameter dict, strictly by name."""
    missing = sorted(set(params) - set(arrays))
    extra = sorted(set(arrays) - set(params))
    if missing or extra:
        raise CheckpointError(f"parameter mismatch: missing={missing}, unexpected={extra}")
    for name, p in params.items():
        if p.data.shape != arrays[name].shape:
            raise CheckpointError(
                f"shape mismatch for {name}: model {p.data.shape}, checkpoint {arrays[name].shape}"
            )
        p.data = arrays[name].astype(np.float64)
