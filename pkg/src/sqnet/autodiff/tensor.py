"""Reverse-mode automatic differentiation over numpy float64 arrays.

A Tensor wraps an ndarray plus a closure that routes its output gradient to
its parents; backward() walks the graph in reverse topological order. Only
the primitives this package trains with are implemented: elementwise
arithmetic, matmul/dense, conv2d, 2x2 max pooling, ReLU (doubling as the
hinge), row L2-normalization, row-wise Euclidean distance, reductions, and a
fused softmax cross-entropy. Subgradient at every kink is 0.

Gradient checking near kinks is meaningless, so ops report their distance to
the nearest kink to an optional KinkMonitor; callers use it to discard
unlucky random draws.
"""

from __future__ import annotations

import contextlib

import numpy as np

_monitor = None


class KinkMonitor:
    """Tracks the smallest distance-to-kink seen while active.

    Two hazard kinds with very different safe distances are kept apart:
    "crossing" gaps (relu/hinge pre-activations, pool runner-up margins) only
    need to exceed the motion a finite-difference step can induce, while
    "curvature" gaps (Euclidean distances, row norms) feed 1/gap**3 into the
    FD truncation error and must be much larger.
    """

    def __init__(self):
        self.min_gap = np.inf
        self.gaps = {"crossing": np.inf, "curvature": np.inf}

    def observe(self, gaps: np.ndarray, kind: str = "crossing"):
        if gaps.size:
            g = float(np.min(np.abs(gaps)))
            if g < self.gaps[kind]:
                self.gaps[kind] = g
            if g < self.min_gap:
                self.min_gap = g

    def clear_of_kinks(self, crossing: float = 3e-4, curvature: float = 3e-2) -> bool:
        return self.gaps["crossing"] > crossing and self.gaps["curvature"] > curvature


@contextlib.contextmanager
def kink_monitor():
    global _monitor
    prev, _monitor = _monitor, KinkMonitor()
    try:
        yield _monitor
    finally:
        _monitor = prev


def _observe_kinks(gaps, kind: str = "crossing"):
    if _monitor is not None:
        _monitor.observe(np.asarray(gaps), kind)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag}, requires_grad={self.requires_grad})"

    def backward(self):
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.data.shape}")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # operator sugar; scalars and arrays are wrapped as constants
    def __add__(self, other):
        return add(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return mul(self, as_tensor(1.0 / float(scalar)))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    g = _unbroadcast(g, t.data.shape)
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _node(data, parents, backward) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req, _parents=tuple(parents) if req else (),
                  _backward=backward if req else None)


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, g)
        _accumulate(b, g)

    return _node(a.data + b.data, (a, b), bw)


def neg(a: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, -g)

    return _node(-a.data, (a,), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _node(a.data * b.data, (a, b), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-d operands, got {a.data.shape} @ {b.data.shape}")

    def bw(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _node(a.data @ b.data, (a, b), bw)


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return add(matmul(x, w), b)


def relu(x: Tensor) -> Tensor:
    _observe_kinks(x.data)
    mask = x.data > 0.0

    def bw(g):
        _accumulate(x, g * mask)

    return _node(np.where(mask, x.data, 0.0), (x,), bw)


hinge = relu  # max(0, .) with subgradient 0 at the kink


def reshape(x: Tensor, shape) -> Tensor:
    old = x.data.shape

    def bw(g):
        _accumulate(x, g.reshape(old))

    return _node(x.data.reshape(shape), (x,), bw)


def sum_all(x: Tensor) -> Tensor:
    def bw(g):
        _accumulate(x, np.full(x.data.shape, float(g)))

    return _node(x.data.sum(), (x,), bw)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size

    def bw(g):
        _accumulate(x, np.full(x.data.shape, float(g) / n))

    return _node(x.data.mean(), (x,), bw)


def sum_axis(x: Tensor, axis: int) -> Tensor:
    def bw(g):
        _accumulate(x, np.broadcast_to(np.expand_dims(g, axis), x.data.shape))

    return _node(x.data.sum(axis=axis), (x,), bw)


def l2_normalize_rows(x: Tensor) -> Tensor:
    norms = np.sqrt((x.data * x.data).sum(axis=1, keepdims=True))
    _observe_kinks(norms, "curvature")
    y = x.data / norms

    def bw(g):
        dot = (y * g).sum(axis=1, keepdims=True)
        _accumulate(x, (g - y * dot) / norms)

    return _node(y, (x,), bw)


def euclidean_rowwise(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise Euclidean distance of two (B, D) tensors -> (B,)."""
    diff = a.data - b.data
    d = np.sqrt((diff * diff).sum(axis=1))
    _observe_kinks(d, "curvature")
    safe = np.where(d > 0.0, d, 1.0)
    unit = np.where(d[:, None] > 0.0, diff / safe[:, None], 0.0)

    def bw(g):
        scaled = g[:, None] * unit
        _accumulate(a, scaled)
        _accumulate(b, -scaled)

    return _node(d, (a, b), bw)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy over the batch; labels are int class indices."""
    z = logits.data
    if z.ndim != 2:
        raise ValueError(f"logits must be (batch, classes), got {z.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (z.shape[0],):
        raise ValueError(f"labels shape {labels.shape} does not match batch {z.shape[0]}")
    if (labels < 0).any() or (labels >= z.shape[1]).any():
        raise ValueError("label outside [0, class_count)")
    m = z.max(axis=1, keepdims=True)
    ez = np.exp(z - m)
    sez = ez.sum(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(sez[:, 0])
    nll = lse - z[np.arange(z.shape[0]), labels]
    probs = ez / sez

    def bw(g):
        d = probs.copy()
        d[np.arange(z.shape[0]), labels] -= 1.0
        _accumulate(logits, float(g) * d / z.shape[0])

    return _node(nll.mean(), (logits,), bw)


def _im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    bsz, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    ho, wo = h + 2 * pad - k + 1, w + 2 * pad - k + 1
    col = win.transpose(0, 2, 3, 1, 4, 5).reshape(bsz, ho * wo, c * k * k)
    return np.ascontiguousarray(col), ho, wo


def _conv_raw(x: np.ndarray, w: np.ndarray, pad: int) -> np.ndarray:
    o, _, k, _ = w.shape
    col, ho, wo = _im2col(x, k, pad)
    out = col @ w.reshape(o, -1).T
    return out.transpose(0, 2, 1).reshape(x.shape[0], o, ho, wo), col


def conv2d(x: Tensor, w: Tensor, b: Tensor, pad: int = 1) -> Tensor:
    """Stride-1 2-d convolution (cross-correlation), square kernel.

    x: (B, C, H, W); w: (O, C, k, k); b: (O,). Requires pad <= k - 1.
    """
    bsz, c, h, wdt = x.data.shape
    o, cw, k, k2 = w.data.shape
    if cw != c or k != k2:
        raise ValueError(f"kernel {w.data.shape} incompatible with input {x.data.shape}")
    if not 0 <= pad <= k - 1:
        raise ValueError(f"need 0 <= pad <= k-1, got pad={pad}, k={k}")
    out, col = _conv_raw(x.data, w.data, pad)
    out = out + b.data[None, :, None, None]

    def bw(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(bsz, -1, o)
        _accumulate(b, g.sum(axis=(0, 2, 3)))
        _accumulate(w, np.tensordot(g2, col, axes=([0, 1], [0, 1])).reshape(w.data.shape))
        if x.requires_grad:
            wf = w.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
            dx, _ = _conv_raw(g, wf, k - 1 - pad)
            _accumulate(x, dx)

    return _node(out, (x, w, b), bw)


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; ties route their gradient to the first
    window slot in row-major order."""
    bsz, c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    hh, wh = h // 2, w // 2
    r = x.data.reshape(bsz, c, hh, 2, wh, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
        bsz, c, hh, wh, 4
    )
    idx = r.argmax(axis=-1)
    srt = np.sort(r, axis=-1)
    # A tie of exact zeros is the everywhere-dead relu case: every path into
    # the window carries zero gradient, so the argmax choice cannot matter.
    # Borderline pre-activations are caught by relu's own observation.
    top, second = srt[..., 3], srt[..., 2]
    live = ~((top == 0.0) & (second == 0.0))
    if live.any():
        _observe_kinks((top - second)[live])
    out = np.take_along_axis(r, idx[..., None], axis=-1)[..., 0]

    def bw(g):
        z = np.zeros_like(r)
        np.put_along_axis(z, idx[..., None], g[..., None], axis=-1)
        _accumulate(
            x,
            z.reshape(bsz, c, hh, wh, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(bsz, c, h, w),
        )

    return _node(out, (x,), bw)
