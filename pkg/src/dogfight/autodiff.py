"""Dense float64 tensors with reverse-mode automatic differentiation.

The engine records operations on an explicit gradient tape.  Forward values
are plain numpy arrays; when a ``Tape`` is active and an input requires a
gradient, each operation appends a backward closure to the tape in execution
order.  ``backward(loss)`` then walks the recorded operations exactly once in
reverse, so inputs are always visited after every operation that consumed
them (the tape is topologically ordered by construction).

Broadcasting is deliberately restricted: two operands must have equal shapes,
or one must be a scalar or a trailing suffix of the other (leading-batch-axis
expansion).  Anything else raises ``DimensionError``.

Without an active tape, operations run as thin numpy wrappers and record
nothing, which makes frozen-weight inference cheap and safe to call from
multiple threads.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

from .errors import ContractError, DimensionError

_GELU_C = math.sqrt(2.0 / math.pi)


class Tensor:
    """A dense n-dimensional float64 array, optionally tracked on a tape."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._tape: "Tape | None" = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def _accum_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            np.add(self.grad, g, out=self.grad)

    def _accum(self, g: np.ndarray) -> None:
        # During a backward pass, gradients flow through a per-pass buffer so
        # that repeated backward() calls add one full dloss/dt each time
        # instead of re-consuming totals accumulated by earlier passes.
        # Closures never mutate their outgoing arrays, so the first store
        # can alias; accumulation always rebinds a fresh array.
        if _PENDING is not None:
            entry = _PENDING.get(id(self))
            if entry is None:
                _PENDING[id(self)] = [self, g]
            else:
                entry[1] = entry[1] + g
        else:
            self._accum_grad(g)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar; the actual implementations are module-level.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)

    def sum(self, axis=None, keepdims: bool = False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


class Tape:
    """Ordered record of operations for one reverse-mode pass.

    Use as a context manager around the forward computation.  Every recorded
    entry pairs the operation's output with a closure that scatters the
    output's gradient back to the inputs.
    """

    def __init__(self):
        self.ops: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self.ops)


_TAPE_STACK: list[Tape] = []
_PENDING: dict[int, list] | None = None


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracked(*inputs: Tensor) -> bool:
    if not _TAPE_STACK:
        return False
    return any(t.requires_grad for t in inputs)


def _record(out: Tensor, backward_fn: Callable[[np.ndarray], None]) -> None:
    tape = _TAPE_STACK[-1]
    out.requires_grad = True
    out._tape = tape
    tape.ops.append((out, backward_fn))


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every tracked tensor.

    ``loss`` must be scalar and must have been produced under a Tape.
    Repeated calls without clearing gradients accumulate.
    """
    global _PENDING
    if not isinstance(loss, Tensor) or loss.size != 1:
        raise ContractError(f"backward() needs a scalar Tensor, got shape "
                            f"{getattr(loss, 'shape', None)}")
    if loss._tape is None or not loss._tape.ops:
        raise ContractError("backward() called without a recorded tape")
    pending: dict[int, list] = {id(loss): [loss, np.ones_like(loss.data)]}
    previous = _PENDING
    _PENDING = pending
    try:
        for out, backward_fn in reversed(loss._tape.ops):
            entry = pending.pop(id(out), None)
            if entry is None:
                continue
            g = entry[1]
            out._accum_grad(g)
            backward_fn(g)
    finally:
        _PENDING = previous
    # whatever is left belongs to leaves (parameters and inputs)
    for t, g in pending.values():
        t._accum_grad(g)


# ---------------------------------------------------------------------------
# broadcasting helpers (suffix-only)
# ---------------------------------------------------------------------------

def _check_suffix(a_shape: tuple[int, ...], b_shape: tuple[int, ...], op: str) -> None:
    if a_shape == b_shape:
        return
    small, big = (a_shape, b_shape) if len(a_shape) <= len(b_shape) else (b_shape, a_shape)
    if small == () or big[len(big) - len(small):] == small:
        return
    raise DimensionError(f"{op}: shapes {a_shape} and {b_shape} are neither equal "
                         f"nor related by leading-axis expansion")


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_suffix(a.shape, b.shape, "add")
    out = Tensor(a.data + b.data)
    if _tracked(a, b):
        def _bw(g):
            if a.requires_grad:
                a._accum(_reduce_to(g, a.shape))
            if b.requires_grad:
                b._accum(_reduce_to(g, b.shape))
        _record(out, _bw)
    return out


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_suffix(a.shape, b.shape, "sub")
    out = Tensor(a.data - b.data)
    if _tracked(a, b):
        def _bw(g):
            if a.requires_grad:
                a._accum(_reduce_to(g, a.shape))
            if b.requires_grad:
                b._accum(-_reduce_to(g, b.shape))
        _record(out, _bw)
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_suffix(a.shape, b.shape, "mul")
    out = Tensor(a.data * b.data)
    if _tracked(a, b):
        def _bw(g):
            if a.requires_grad:
                a._accum(_reduce_to(g * b.data, a.shape))
            if b.requires_grad:
                b._accum(_reduce_to(g * a.data, b.shape))
        _record(out, _bw)
    return out


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_suffix(a.shape, b.shape, "div")
    out = Tensor(a.data / b.data)
    if _tracked(a, b):
        def _bw(g):
            if a.requires_grad:
                a._accum(_reduce_to(g / b.data, a.shape))
            if b.requires_grad:
                b._accum(_reduce_to(-g * a.data / (b.data * b.data), b.shape))
        _record(out, _bw)
    return out


def neg(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data)
    if _tracked(a):
        def _bw(g):
            a._accum(-g)
        _record(out, _bw)
    return out


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast.

    The common "batched stack times 2-D weight" case collapses to a single
    flat product in both directions, which is far cheaper than numpy's
    per-slice gufunc loop.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul: operands must be at least 2-D, got "
                             f"{a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions differ, {a.shape} vs {b.shape}")
    flat_weight = b.ndim == 2 and a.ndim > 2
    if flat_weight:
        k = a.shape[-1]
        a2d = np.ascontiguousarray(a.data).reshape(-1, k)
        out_data = (a2d @ b.data).reshape(a.shape[:-1] + (b.shape[-1],))
    else:
        out_data = a.data @ b.data
    out = Tensor(out_data)
    if _tracked(a, b):
        def _bw(g):
            if flat_weight:
                g2d = np.ascontiguousarray(g).reshape(-1, b.shape[-1])
                if a.requires_grad:
                    a._accum((g2d @ b.data.T).reshape(a.shape))
                if b.requires_grad:
                    b._accum(a2d.T @ g2d)
            else:
                if a.requires_grad:
                    a._accum(_reduce_to(g @ np.swapaxes(b.data, -1, -2),
                                        a.shape))
                if b.requires_grad:
                    b._accum(_reduce_to(np.swapaxes(a.data, -1, -2) @ g,
                                        b.shape))
        _record(out, _bw)
    return out


# ---------------------------------------------------------------------------
# reductions / shape ops
# ---------------------------------------------------------------------------

def tensor_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))
    if _tracked(a):
        def _bw(g):
            if axis is None:
                a._accum(np.broadcast_to(g, a.shape))
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                a._accum(np.broadcast_to(gg, a.shape))
        _record(out, _bw)
    return out


def tensor_mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    if _tracked(a):
        def _bw(g):
            scale = 1.0 / count
            if axis is None:
                a._accum(np.broadcast_to(g * scale, a.shape))
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                a._accum(np.broadcast_to(gg * scale, a.shape))
        _record(out, _bw)
    return out


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape))
    if _tracked(a):
        def _bw(g):
            a._accum(g.reshape(a.shape))
        _record(out, _bw)
    return out


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.transpose(a.data, axes))
    if _tracked(a):
        inverse = np.argsort(axes)

        def _bw(g):
            a._accum(np.transpose(g, inverse))
        _record(out, _bw)
    return out


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    if _tracked(*parts):
        sizes = [p.shape[axis] for p in parts]
        offsets = np.cumsum([0] + sizes)

        def _bw(g):
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                if p.requires_grad:
                    idx = [slice(None)] * g.ndim
                    idx[axis] = slice(lo, hi)
                    p._accum(g[tuple(idx)])
        _record(out, _bw)
    return out


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = Tensor(a.data[idx])
    if _tracked(a):
        def _bw(g):
            full = np.zeros(a.shape, dtype=np.float64)
            full[idx] = g
            a._accum(full)
        _record(out, _bw)
    return out


# ---------------------------------------------------------------------------
# elementwise nonlinearities
# ---------------------------------------------------------------------------

def relu(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0))
    if _tracked(a):
        def _bw(g):
            a._accum(g * (a.data > 0.0))
        _record(out, _bw)
    return out


def gelu(a) -> Tensor:
    """GeLU in its tanh form, 0.5 x (1 + tanh(c (x + 0.044715 x^3)))."""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x * x * x)
    t = np.tanh(inner)
    out = Tensor(0.5 * x * (1.0 + t))
    if _tracked(a):
        def _bw(g):
            d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
            a._accum(g * (0.5 * (1.0 + t)
                          + 0.5 * x * (1.0 - t * t) * d_inner))
        _record(out, _bw)
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.data)
    out = Tensor(t)
    if _tracked(a):
        def _bw(g):
            a._accum(g * (1.0 - t * t))
        _record(out, _bw)
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = expit(a.data)
    out = Tensor(s)
    if _tracked(a):
        def _bw(g):
            a._accum(g * s * (1.0 - s))
        _record(out, _bw)
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.data)
    out = Tensor(e)
    if _tracked(a):
        def _bw(g):
            a._accum(g * e)
        _record(out, _bw)
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data))
    if _tracked(a):
        def _bw(g):
            a._accum(g / a.data)
        _record(out, _bw)
    return out


def softplus(a) -> Tensor:
    """log(1 + e^x), computed without overflow."""
    a = as_tensor(a)
    out = Tensor(np.logaddexp(0.0, a.data))
    if _tracked(a):
        def _bw(g):
            a._accum(g * expit(a.data))
        _record(out, _bw)
    return out


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values; gradient passes only where lo <= x <= hi."""
    a = as_tensor(a)
    out = Tensor(np.clip(a.data, lo, hi))
    if _tracked(a):
        def _bw(g):
            a._accum(g * ((a.data >= lo) & (a.data <= hi)))
        _record(out, _bw)
    return out


def minimum(a, b) -> Tensor:
    """Elementwise minimum; the smaller operand receives the gradient
    (ties go to the first)."""
    a, b = as_tensor(a), as_tensor(b)
    _check_suffix(a.shape, b.shape, "minimum")
    out = Tensor(np.minimum(a.data, b.data))
    if _tracked(a, b):
        take_a = a.data <= b.data

        def _bw(g):
            if a.requires_grad:
                a._accum(_reduce_to(g * take_a, a.shape))
            if b.requires_grad:
                b._accum(_reduce_to(g * ~take_a, b.shape))
        _record(out, _bw)
    return out


# ---------------------------------------------------------------------------
# normalization / attention primitives
# ---------------------------------------------------------------------------

def softmax(a) -> Tensor:
    """Probability simplex over the last axis, stabilized by max subtraction."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y)
    if _tracked(a):
        def _bw(g):
            dot = (g * y).sum(axis=-1, keepdims=True)
            a._accum(y * (g - dot))
        _record(out, _bw)
    return out


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Zero-mean unit-variance normalization over the last axis, then affine."""
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    d = a.shape[-1] if a.ndim else 0
    if d == 0:
        raise DimensionError("layer_norm: last axis is empty")
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm: gain/bias must have shape ({d},), got "
                             f"{gain.shape} and {bias.shape}")
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = Tensor(gain.data * xhat + bias.data)
    if _tracked(a, gain, bias):
        def _bw(g):
            if bias.requires_grad:
                bias._accum(g.reshape(-1, d).sum(axis=0))
            if gain.requires_grad:
                gain._accum((g * xhat).reshape(-1, d).sum(axis=0))
            if a.requires_grad:
                dxhat = g * gain.data
                m1 = dxhat.mean(axis=-1, keepdims=True)
                m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
                a._accum((dxhat - m1 - xhat * m2) * inv_std)
        _record(out, _bw)
    return out


# ---------------------------------------------------------------------------
# recurrent cell
# ---------------------------------------------------------------------------

def lstm_step(x, h, c, wx, wh, b) -> tuple[Tensor, Tensor]:
    """One LSTM cell step.

    Gate layout along the last weight axis is (input, forget, candidate,
    output); input/forget/output gates are sigmoid, the candidate is tanh:

        c' = f * c + i * g,   h' = o * tanh(c')

    ``wx`` is (d_in, 4d), ``wh`` is (d, 4d), ``b`` is (4d,).  ``x`` may carry
    leading batch axes.
    """
    x, h, c = as_tensor(x), as_tensor(h), as_tensor(c)
    wx, wh, b = as_tensor(wx), as_tensor(wh), as_tensor(b)
    d = wh.shape[0]
    if wx.shape[-1] != 4 * d or wh.shape != (d, 4 * d) or b.shape != (4 * d,):
        raise DimensionError(f"lstm_step: weight shapes inconsistent: wx {wx.shape}, "
                             f"wh {wh.shape}, b {b.shape}")
    if x.shape[-1] != wx.shape[0] or h.shape[-1] != d or c.shape[-1] != d:
        raise DimensionError(f"lstm_step: state shapes inconsistent: x {x.shape}, "
                             f"h {h.shape}, c {c.shape} for cell width {d}")
    z = add(add(matmul(x, wx), matmul(h, wh)), b)
    i = sigmoid(slice_axis(z, -1, 0, d))
    f = sigmoid(slice_axis(z, -1, d, 2 * d))
    g = tanh(slice_axis(z, -1, 2 * d, 3 * d))
    o = sigmoid(slice_axis(z, -1, 3 * d, 4 * d))
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


def lstm_scan(x_seq, wx, wh, b) -> Tensor:
    """Full LSTM scan from zero state: (B, n, d_in) -> all hiddens (B, n, d).

    Computes the same recurrence as repeated ``lstm_step`` calls but as one
    taped operation with a fused backward-through-time kernel, which keeps
    the tape short for training.  The input projection for every timestep is
    hoisted into a single matrix product.
    """
    from ._scan_kernels import scan_backward, scan_forward
    x_seq, wx, wh, b = (as_tensor(x_seq), as_tensor(wx), as_tensor(wh),
                        as_tensor(b))
    d = wh.shape[0]
    if x_seq.ndim != 3:
        raise DimensionError(f"lstm_scan: input must be (batch, n, d_in), "
                             f"got {x_seq.shape}")
    if (wx.shape != (x_seq.shape[-1], 4 * d) or wh.shape != (d, 4 * d)
            or b.shape != (4 * d,)):
        raise DimensionError(f"lstm_scan: weight shapes inconsistent: "
                             f"wx {wx.shape}, wh {wh.shape}, b {b.shape}")
    batch, n, din = x_seq.shape
    x_data = np.ascontiguousarray(x_seq.data)
    xproj = (x_data.reshape(batch * n, din) @ wx.data + b.data).reshape(
        batch, n, 4 * d)
    hs, gates_i, gates_f, gates_g, gates_o, cells, prev_h = scan_forward(
        xproj, wh.data)
    out = Tensor(hs)
    if _tracked(x_seq, wx, wh, b):
        def _bw(grad_hs):
            dx, dwx, dwh, db = scan_backward(
                np.ascontiguousarray(grad_hs), x_data, wx.data, wh.data,
                gates_i, gates_f, gates_g, gates_o, cells, prev_h)
            if x_seq.requires_grad:
                x_seq._accum(dx)
            if wx.requires_grad:
                wx._accum(dwx)
            if wh.requires_grad:
                wh._accum(dwh)
            if b.requires_grad:
                b._accum(db)
        _record(out, _bw)
    return out


# ---------------------------------------------------------------------------
# parameter utilities
# ---------------------------------------------------------------------------

def parameter(data, name: str) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def glorot_uniform(shape: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    fan_in = shape[0] if len(shape) > 1 else shape[0]
    fan_out = shape[-1]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
