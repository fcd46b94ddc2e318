"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tape records each operation as it executes; since execution order is a
topological order, backward() just replays the records in reverse and
accumulates gradients into Tensor.grad. Calling an op with tape=None skips
recording entirely, which is the cheap path for inference and for
finite-difference probes.
"""

from __future__ import annotations

import numpy as np

# When True every op asserts its output is finite (slow; meant for tests).
CHECK_FINITE = False


class ShapeError(ValueError):
    pass


class Tensor:
    """A float64 array plus its accumulated gradient (lazily allocated)."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Tape:
    """Execution-ordered op records; reverse iteration is a valid backward order."""

    __slots__ = ("_records",)

    def __init__(self):
        self._records: list = []

    def __len__(self):
        return len(self._records)


def _out(data) -> Tensor:
    if CHECK_FINITE and not np.all(np.isfinite(data)):
        raise FloatingPointError("op produced a non-finite value")
    return Tensor(data)


def _accum(t: Tensor, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient down to `shape` (inverse of numpy broadcasting)."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def matmul(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.data.shape} and {b.data.shape}")
    out = _out(a.data @ b.data)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(a, g @ b.data.T)
            _accum(b, a.data.T @ g)
        tape._records.append(bw)
    return out


def add(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    try:
        out = _out(a.data + b.data)
    except ValueError:
        raise ShapeError(f"add: incompatible shapes {a.data.shape} and {b.data.shape}") from None
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(g, b.data.shape))
        tape._records.append(bw)
    return out


def mul(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    """Pointwise product (numpy broadcasting allowed)."""
    try:
        out = _out(a.data * b.data)
    except ValueError:
        raise ShapeError(f"mul: incompatible shapes {a.data.shape} and {b.data.shape}") from None
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
            _accum(b, _unbroadcast(g * a.data, b.data.shape))
        tape._records.append(bw)
    return out


def scale(a: Tensor, c: float, tape: Tape | None = None) -> Tensor:
    out = _out(a.data * c)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(a, g * c)
        tape._records.append(bw)
    return out


def concat(xs, tape: Tape | None = None) -> Tensor:
    """Concatenate along the last axis."""
    xs = list(xs)
    if not xs:
        raise ShapeError("concat of zero tensors")
    lead = xs[0].data.shape[:-1]
    for x in xs[1:]:
        if x.data.shape[:-1] != lead:
            raise ShapeError(
                f"concat: incompatible shapes {xs[0].data.shape} and {x.data.shape}"
            )
    out = _out(np.concatenate([x.data for x in xs], axis=-1))
    if tape is not None:
        widths = [x.data.shape[-1] for x in xs]
        def bw():
            g = out.grad
            if g is None:
                return
            off = 0
            for x, w in zip(xs, widths):
                _accum(x, g[..., off : off + w])
                off += w
        tape._records.append(bw)
    return out


def vstack(xs, tape: Tape | None = None) -> Tensor:
    """Stack 2-D tensors along the first axis (row blocks)."""
    xs = list(xs)
    if not xs:
        raise ShapeError("vstack of zero tensors")
    cols = xs[0].data.shape[-1]
    for x in xs:
        if x.data.ndim != 2 or x.data.shape[-1] != cols:
            raise ShapeError(
                f"vstack: incompatible shapes {xs[0].data.shape} and {x.data.shape}"
            )
    out = _out(np.concatenate([x.data for x in xs], axis=0))
    if tape is not None:
        heights = [x.data.shape[0] for x in xs]
        def bw():
            g = out.grad
            if g is None:
                return
            off = 0
            for x, h in zip(xs, heights):
                _accum(x, g[off : off + h])
                off += h
        tape._records.append(bw)
    return out


def row(x: Tensor, i: int, tape: Tape | None = None) -> Tensor:
    """Row i of a 2-D tensor, as a (1, D) tensor."""
    if x.data.ndim != 2:
        raise ShapeError(f"row: expected 2-D tensor, got shape {x.data.shape}")
    out = _out(x.data[i : i + 1])
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[i : i + 1] += g
        tape._records.append(bw)
    return out


def slice_cols(x: Tensor, start: int, stop: int, tape: Tape | None = None) -> Tensor:
    if not (0 <= start < stop <= x.data.shape[-1]):
        raise ShapeError(f"slice_cols: [{start}:{stop}] out of range for shape {x.data.shape}")
    out = _out(x.data[..., start:stop])
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            x.grad[..., start:stop] += g
        tape._records.append(bw)
    return out


def sigmoid(x: Tensor, tape: Tape | None = None) -> Tensor:
    # tanh formulation is saturation-safe at both ends
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    out = _out(s)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(x, g * s * (1.0 - s))
        tape._records.append(bw)
    return out


def tanh(x: Tensor, tape: Tape | None = None) -> Tensor:
    t = np.tanh(x.data)
    out = _out(t)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(x, g * (1.0 - t * t))
        tape._records.append(bw)
    return out


def softmax(x: Tensor, tape: Tape | None = None) -> Tensor:
    """Softmax along the last axis, log-sum-exp stabilized."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)
    out = _out(s)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            dot = (g * s).sum(axis=-1, keepdims=True)
            _accum(x, (g - dot) * s)
        tape._records.append(bw)
    return out


def log_softmax(x: Tensor, tape: Tape | None = None) -> Tensor:
    z = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    out = _out(y)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(x, g - np.exp(y) * g.sum(axis=-1, keepdims=True))
        tape._records.append(bw)
    return out


def embedding_lookup(matrix: Tensor, indices, tape: Tape | None = None) -> Tensor:
    """Gather rows of a 2-D matrix; indices is a 1-D integer array."""
    if matrix.data.ndim != 2:
        raise ShapeError(f"embedding_lookup: expected 2-D matrix, got {matrix.data.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError(f"embedding_lookup: expected 1-D indices, got shape {idx.shape}")
    out = _out(matrix.data[idx])
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            if matrix.grad is None:
                matrix.grad = np.zeros_like(matrix.data)
            np.add.at(matrix.grad, idx, g)
        tape._records.append(bw)
    return out


def dropout(x: Tensor, p: float, train: bool, rng, tape: Tape | None = None) -> Tensor:
    """Inverted dropout: zero each element with probability p and scale by 1/(1-p).

    Identity when p == 0 or train is False; the identity path draws no randomness.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in train mode requires an rng")
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    out = _out(x.data * mask)
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(x, g * mask)
        tape._records.append(bw)
    return out


def rowsum(x: Tensor, tape: Tape | None = None) -> Tensor:
    """Sum along the last axis, keeping the axis (rows of shape 1)."""
    out = _out(x.data.sum(axis=-1, keepdims=True))
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(x, np.broadcast_to(g, x.data.shape))
        tape._records.append(bw)
    return out


def sum_all(x: Tensor, tape: Tape | None = None) -> Tensor:
    out = _out(x.data.sum())
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            _accum(x, np.broadcast_to(g, x.data.shape))
        tape._records.append(bw)
    return out


def pick(x: Tensor, indices, tape: Tape | None = None) -> Tensor:
    """out[i, 0] = x[i, indices[i]] for a 2-D tensor."""
    if x.data.ndim != 2:
        raise ShapeError(f"pick: expected 2-D tensor, got shape {x.data.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.shape != (x.data.shape[0],):
        raise ShapeError(f"pick: indices shape {idx.shape} does not match {x.data.shape}")
    rows_ = np.arange(x.data.shape[0])
    out = _out(x.data[rows_, idx][:, None])
    if tape is not None:
        def bw():
            g = out.grad
            if g is None:
                return
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            np.add.at(x.grad, (rows_, idx), g[:, 0])
        tape._records.append(bw)
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(tensor) into .grad for every tensor on the tape."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    loss.grad = np.ones_like(loss.data)
    for bw in reversed(tape._records):
        bw()
