"""Dense float64 tensors and the gradient tape.

Reverse-mode differentiation works by recording every differentiable
operation, in execution order, onto the active :class:`Tape`. Because ops
are recorded as they run, the record is already topologically sorted and
``backward`` simply walks it in reverse. One training run owns one tape;
the active-tape stack is thread-local so independent runs can execute
concurrently.
"""

from __future__ import annotations

import threading
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ContractError

_STATE = threading.local()


def _tape_stack() -> list:
    stack = getattr(_STATE, "stack", None)
    if stack is None:
        stack = []
        _STATE.stack = stack
    return stack


def active_tape() -> "Tape | None":
    """The innermost tape currently recording, or None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A dense n-dimensional float64 value with an optional gradient buffer.

    ``data`` is stored row-major. ``grad`` is filled in by :func:`backward`
    and has the same shape as ``data`` whenever present. Tensors are
    single-writer: do not mutate ``data`` while a tape that saw the tensor
    is still live.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

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
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        """A constant copy that shares no gradient history."""
        return Tensor(self.data.copy(), requires_grad=False)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Convenience arithmetic; the real work lives in ops.py.
    def __add__(self, other):
        from . import ops

        return ops.add(self, _lift(other))

    def __radd__(self, other):
        from . import ops

        return ops.add(_lift(other), self)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, _lift(other))

    def __rsub__(self, other):
        from . import ops

        return ops.sub(_lift(other), self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, _lift(other))

    def __rmul__(self, other):
        from . import ops

        return ops.mul(_lift(other), self)

    def __neg__(self):
        from . import ops

        return ops.mul(self, Tensor(-1.0))

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, _lift(other))


def _lift(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


class TapeEntry(NamedTuple):
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    # Maps the upstream gradient to per-input contributions (None = no flow).
    backward: Callable[[np.ndarray], tuple[np.ndarray | None, ...]]
    # Op-specific details (reduce axis, clamp bounds) for tape introspection.
    meta: dict | None


class Tape:
    """Ordered record of differentiable operations.

    Entries are appended in execution order, so every operation's inputs
    precede it and reverse iteration is a valid backward schedule.
    """

    def __init__(self):
        self.entries: list[TapeEntry] = []

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward, meta=None) -> None:
        self.entries.append(TapeEntry(op, tuple(inputs), output, backward, meta))

    def __len__(self) -> int:
        return len(self.entries)

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise ContractError("tape context exited out of order")
        stack.pop()


def record_op(op: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward, meta=None) -> Tensor:
    """Create the output tensor of an op, recording it if a tape is active.

    The output requires a gradient only when some input does and a tape is
    listening; otherwise the op runs as plain evaluation.
    """
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs_grad)
    if needs_grad:
        tape.record(op, inputs, out, backward, meta)
    return out


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate ``grad`` buffers for every requires-grad tensor feeding ``loss``.

    Gradients accumulate: calling backward again without clearing grads adds
    a second, independent pass' contributions on top of the first.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    # Accumulate within this pass in a side table so repeated backward calls
    # stay independent, then fold the totals into the persistent buffers.
    flowing: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    touched: dict[int, Tensor] = {id(loss): loss}
    for entry in reversed(tape.entries):
        upstream = flowing.get(id(entry.output))
        if upstream is None:
            continue  # not on the path from loss
        contributions = entry.backward(upstream)
        for tensor, contrib in zip(entry.inputs, contributions):
            if contrib is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            held = flowing.get(key)
            flowing[key] = contrib if held is None else held + contrib
            touched[key] = tensor
    for key, tensor in touched.items():
        if tensor.grad is None:
            tensor.grad = np.zeros_like(tensor.data)
        tensor.grad += flowing[key]
