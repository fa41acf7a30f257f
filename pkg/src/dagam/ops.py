"""Differentiable operations on :class:`~dagam.tensor.Tensor`.

All ops follow numpy's trailing-dimension broadcast rule and work on
float64 data. Binary ops and matmul accept extra leading batch dimensions;
gradients are summed back down to each operand's shape.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DegenerateInputError, DimensionError
from .tensor import Tensor, record_op

# Arguments of log are clamped below at this floor so loss terms stay finite
# on zero probabilities; the gradient is zeroed inside the clamped region.
LOG_FLOOR = 1e-12


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _require_broadcastable(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; extra leading dimensions broadcast as a batch."""
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions disagree, {a.shape} x {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul: batch dimensions disagree, {a.shape} x {b.shape}") from None
    out = a.data @ b.data

    def backward(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return record_op("matmul", (a, b), out, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_broadcastable(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record_op("add", (a, b), a.data + b.data, backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_broadcastable(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record_op("sub", (a, b), a.data - b.data, backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_broadcastable(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record_op("mul", (a, b), a.data * b.data, backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return record_op("relu", (x,), np.where(mask, x.data, 0.0), backward)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - y * y),)

    return record_op("tanh", (x,), y, backward)


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)

    def backward(g):
        return (g * y,)

    return record_op("exp", (x,), y, backward)


def log(x: Tensor) -> Tensor:
    """Natural log of ``max(x, LOG_FLOOR)``; flat (zero gradient) below the floor."""
    clamped = np.maximum(x.data, LOG_FLOOR)
    inside = x.data >= LOG_FLOOR

    def backward(g):
        return (np.where(inside, g / clamped, 0.0),)

    return record_op("log", (x,), np.log(clamped), backward)


def clamp(x: Tensor, lo: float | None = None, hi: float | None = None) -> Tensor:
    if lo is not None and hi is not None and lo > hi:
        raise ContractError(f"clamp: lo={lo} exceeds hi={hi}")
    y = np.clip(x.data, lo, hi)
    passthrough = np.ones(x.shape, dtype=bool)
    if lo is not None:
        passthrough &= x.data > lo
    if hi is not None:
        passthrough &= x.data < hi

    def backward(g):
        return (g * passthrough,)

    return record_op("clamp", (x,), y, backward, meta={"lo": lo, "hi": hi})


def _check_reduce_axis(x: Tensor, axis: int | None) -> int | None:
    if axis is None:
        if x.size == 0:
            raise DegenerateInputError("cannot reduce an empty tensor")
        return None
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"axis {axis} out of range for shape {x.shape}")
    axis = axis % x.ndim
    if x.shape[axis] == 0:
        raise DegenerateInputError(f"cannot reduce over empty axis {axis} of shape {x.shape}")
    return axis


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    axis = _check_reduce_axis(x, axis)
    out = x.data.sum(axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape),)

    return record_op("sum", (x,), out, backward)


def reduce_mean(x: Tensor, axis: int | None = None) -> Tensor:
    axis = _check_reduce_axis(x, axis)
    count = x.size if axis is None else x.shape[axis]
    out = x.data.mean(axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, x.shape),)

    return record_op("mean", (x,), out, backward)


def reduce_max(x: Tensor, axis: int | None = None) -> Tensor:
    """Max reduction; the gradient routes to the first maximal element."""
    axis = _check_reduce_axis(x, axis)
    out = x.data.max(axis=axis)

    def backward(g):
        grad = np.zeros_like(x.data)
        if axis is None:
            grad.flat[np.argmax(x.data)] = g
        else:
            first = np.expand_dims(np.argmax(x.data, axis=axis), axis)
            np.put_along_axis(grad, first, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return record_op("max", (x,), out, backward, meta={"axis": axis})


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax along the last axis, computed with max subtraction for stability."""
    if x.ndim < 1:
        raise DimensionError("softmax_rows needs at least one axis")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    y = np.exp(shifted)
    y /= y.sum(axis=-1, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return record_op("softmax_rows", (x,), y, backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"cannot reshape {x.shape} to {shape}") from None
    original = x.shape

    def backward(g):
        return (g.reshape(original),)

    return record_op("reshape", (x,), out, backward)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise DegenerateInputError("concat of zero tensors")
    ndim = tensors[0].ndim
    axis = axis % ndim
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, offsets, axis=axis))

    return record_op("concat", tuple(tensors), out, backward)


def gather_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """Select rows along the second-to-last axis.

    ``index`` has shape ``x.shape[:-2] + (M,)`` with integer entries in
    ``[0, N)``; the output is ``x.shape[:-2] + (M, F)``. The backward pass
    scatter-adds, so repeated indices accumulate.
    """
    if x.ndim < 2:
        raise DimensionError(f"gather_rows needs rank >= 2 input, got {x.shape}")
    index = np.asarray(index, dtype=np.intp)
    if index.shape[:-1] != x.shape[:-2]:
        raise DimensionError(
            f"gather_rows: index shape {index.shape} does not match input {x.shape}"
        )
    out = np.take_along_axis(x.data, index[..., None], axis=-2)
    n_rows, n_cols = x.shape[-2], x.shape[-1]
    batch = int(np.prod(x.shape[:-2], dtype=np.intp)) if x.ndim > 2 else 1

    def backward(g):
        grad = np.zeros((batch, n_rows, n_cols))
        flat_idx = index.reshape(batch, -1)
        np.add.at(grad, (np.arange(batch)[:, None], flat_idx), g.reshape(batch, -1, n_cols))
        return (grad.reshape(x.shape),)

    return record_op("gather_rows", (x,), out, backward)
