"""Reverse-mode automatic differentiation over float64 numpy arrays.

A deliberately small tape: enough operations to express strided
convolution stacks, positionwise linear maps, masked attention,
correlation softmaxes and bilinear resampling, all in double precision
so finite-difference checks are meaningful.
"""

from __future__ import annotations

import contextlib

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference, FD probes)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    """A float64 array plus the backward closure that produced it."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    # keep numpy from consuming Tensor operands elementwise; reflected
    # operators must dispatch back to the tape
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    # -- graph bookkeeping -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, seed=None):
        """Accumulate gradients of this (scalar) tensor into .grad fields."""
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() without seed requires a scalar tensor")
            seed = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(seed, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        return mul(self, power(other, -1.0))

    def __rtruediv__(self, other):
        return mul(power(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- method forms ------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def relu(self):
        return relu(self)

    def sigmoid(self):
        return sigmoid(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def _needs_graph(*tensors) -> bool:
    return _GRAD_ENABLED and any(t.requires_grad for t in tensors)


def _result(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _needs_graph(*parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Reduce `grad` down to `shape` by summing broadcast axes."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


# -- elementwise -------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _result(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _result(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def power(a, p: float):
    a = as_tensor(a)
    out = a.data ** p
    return _result(out, (a,), lambda g: (g * p * a.data ** (p - 1.0),))


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,))


def log(a):
    a = as_tensor(a)
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0.0
    return _result(a.data * mask, (a,), lambda g: (g * mask,))


def sigmoid(a):
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _result(out, (a,), lambda g: (g * out * (1.0 - out),))


def clip(a, lo: float, hi: float):
    """Clamp values; gradient passes through strictly inside (lo, hi)."""
    a = as_tensor(a)
    out = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)
    return _result(out, (a,), lambda g: (g * inside,))


# -- reductions ---------------------------------------------------------------


def sum_(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        g2 = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g2, a.data.shape).copy(),)

    return _result(out, (a,), backward)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is None:
        n = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = int(np.prod([a.data.shape[ax] for ax in axes]))
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / n)


def softmax(a, axis=-1, eps: float = 0.0):
    """Softmax with a detached max shift; `eps` is added to the denominator."""
    a = as_tensor(a)
    shift = a.data.max(axis=axis, keepdims=True)
    e = exp(add(a, -shift))
    denom = add(sum_(e, axis=axis, keepdims=True), eps)
    return mul(e, power(denom, -1.0))


# -- shape manipulation -------------------------------------------------------


def reshape(a, shape):
    a = as_tensor(a)
    orig = a.data.shape
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(orig),))


def transpose(a, axes):
    a = as_tensor(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def getitem(a, key):
    a = as_tensor(a)
    out = a.data[key]

    def backward(g):
        ga = np.zeros_like(a.data)
        ga[key] += g
        return (ga,)

    return _result(out, (a,), backward)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def stack(tensors, axis=0):
    return concat([reshape(t, t.data.shape[:axis] + (1,) + t.data.shape[axis:]) for t in tensors], axis=axis)


# -- linear algebra ------------------------------------------------------------


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return (_unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape))

    return _result(np.matmul(a.data, b.data), (a, b), backward)


def take_rows(table, ids):
    """Gather rows of a 2D table by integer index; scatter-add on backward."""
    table = as_tensor(table)
    ids = np.asarray(ids)

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.ravel(), g.reshape(-1, table.data.shape[1]))
        return (gt,)

    return _result(table.data[ids], (table,), backward)


# -- spatial ops ----------------------------------------------------------------


def conv2d(x, w, b=None, stride: int = 1, padding: int = 0):
    """2D convolution on NCHW input with an OIHW kernel."""
    x, w = as_tensor(x), as_tensor(w)
    n, cin, h, wd = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv2d channel mismatch: input {cin}, kernel {cin_w}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (wd + 2 * padding - kw) // stride + 1
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # (n, cin, oh, ow, kh, kw) -> (n, oh*ow, cin*kh*kw)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, oh * ow, cin * kh * kw)
    wmat = w.data.reshape(cout, -1)
    out = np.matmul(cols, wmat.T).transpose(0, 2, 1).reshape(n, cout, oh, ow)

    def backward(g):
        g2 = g.reshape(n, cout, oh * ow).transpose(0, 2, 1)  # (n, oh*ow, cout)
        gw = np.tensordot(g2, cols, axes=([0, 1], [0, 1])).reshape(w.data.shape)
        gcols = np.matmul(g2, wmat).reshape(n, oh, ow, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += gcols[:, :, :, :, i, j]
        gx = gxp[:, :, padding : padding + h, padding : padding + wd] if padding else gxp
        return (gx, gw)

    parents = [x, w]
    if b is not None:
        return add(_result(out, parents, backward), reshape(b, (1, -1, 1, 1)))
    return _result(out, parents, backward)


def _resize_indices(src: int, dst: int):
    """Half-pixel source coordinates for a 1D bilinear resize."""
    coords = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    coords = np.clip(coords, 0.0, src - 1.0)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, src - 1)
    frac = coords - lo
    return lo, hi, frac


def bilinear_resize(x, out_h: int, out_w: int):
    """Bilinear resampling of NCHW input to (out_h, out_w), half-pixel centers."""
    x = as_tensor(x)
    n, c, h, w = x.data.shape
    y0, y1, fy = _resize_indices(h, out_h)
    x0, x1, fx = _resize_indices(w, out_w)
    wy0, wy1 = (1.0 - fy)[:, None], fy[:, None]
    wx0, wx1 = (1.0 - fx)[None, :], fx[None, :]
    corners = (
        (y0, x0, wy0 * wx0),
        (y0, x1, wy0 * wx1),
        (y1, x0, wy1 * wx0),
        (y1, x1, wy1 * wx1),
    )
    out = np.zeros((n, c, out_h, out_w))
    for yy, xx, ww in corners:
        out += x.data[:, :, yy[:, None], xx[None, :]] * ww

    def backward(g):
        gx = np.zeros_like(x.data)
        for yy, xx, ww in corners:
            np.add.at(gx, (slice(None), slice(None), yy[:, None], xx[None, :]), g * ww)
        return (gx,)

    return _result(out, (x,), backward)
