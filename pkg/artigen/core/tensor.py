"""Dense float64 tensors with a reverse-mode gradient tape.

The differentiable surface is a fixed set of eleven ops: matmul, add, mul,
relu, sigmoid, reduce_sum, reduce_mean, square, concat, index (slicing) and
broadcast_to. Everything else in the package is composed from them.

Ops are recorded only inside a ``trace()`` block and only when at least one
operand requires a gradient. A tape belongs to the thread that opened it;
untraced ops are pure and may run concurrently.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit


class ShapeError(ValueError):
    """Operand shapes do not conform for an op."""


class NumericalError(RuntimeError):
    """A non-finite value appeared where only finite values are allowed."""

    def __init__(self, message: str, where: Optional[str] = None):
        super().__init__(message)
        self.where = where


class Tensor:
    """Immutable 64-bit float array, optionally attached to a gradient tape."""

    __slots__ = ("data", "requires_grad", "tape")

    def __init__(self, data, requires_grad: bool = False, copy: bool = True):
        arr = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64).view()
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = requires_grad
        self.tape: Optional[Tape] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        flags = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flags})"

    # Operator sugar over the op set
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __neg__(self): return scale(self, -1.0)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, key): return index(self, key)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        return reduce_sum(self, axis)

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        return reduce_mean(self, axis)

    def relu(self) -> "Tensor":
        return relu(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)

    def square(self) -> "Tensor":
        return square(self)


TensorLike = Union[Tensor, np.ndarray, float, int, Sequence[float]]
Need = Tuple[bool, ...]
Vjp = Callable[[np.ndarray, Need], Tuple[Optional[np.ndarray], ...]]


@dataclass
class _Record:
    op: str
    out: Tensor
    inputs: Tuple[Tensor, ...]
    vjp: Vjp


class Tape:
    """Ordered record of traced ops; single writer."""

    def __init__(self):
        self.records: List[_Record] = []
        self._position: Dict[int, int] = {}

    def record(self, op: str, out: Tensor, inputs: Tuple[Tensor, ...], vjp: Vjp) -> None:
        self._position[id(out)] = len(self.records)
        self.records.append(_Record(op, out, inputs, vjp))
        out.tape = self

    def position(self, t: Tensor) -> Optional[int]:
        return self._position.get(id(t))

    def __contains__(self, t: Tensor) -> bool:
        return id(t) in self._position

    def __len__(self) -> int:
        return len(self.records)


_state = threading.local()


@contextmanager
def trace() -> Iterator[Tape]:
    """Record every op executed in this thread inside the block."""
    tape = Tape()
    previous = getattr(_state, "tape", None)
    _state.tape = tape
    try:
        yield tape
    finally:
        _state.tape = previous


def as_tensor(x: TensorLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _emit(op: str, out: np.ndarray, inputs: Tuple[Tensor, ...], vjp: Vjp) -> Tensor:
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"{op} produced a non-finite value", where=op)
    t = Tensor(out, copy=False)
    tape = getattr(_state, "tape", None)
    if tape is not None and any(i.requires_grad for i in inputs):
        t.requires_grad = True
        tape.record(op, t, inputs, vjp)
    return t


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# The op set
# ---------------------------------------------------------------------------

def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shape mismatch {a.shape} @ {b.shape}")
    A, B = a.data, b.data

    def vjp(g, need):
        return (g @ B.T if need[0] else None, A.T @ g if need[1] else None)

    return _emit("matmul", A @ B, (a, b), vjp)


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("add", a, b)
    return _emit("add", a.data + b.data, (a, b), lambda g, need: (g, g))


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mul", a, b)
    A, B = a.data, b.data

    def vjp(g, need):
        return (g * B if need[0] else None, g * A if need[1] else None)

    return _emit("mul", A * B, (a, b), vjp)


def relu(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return _emit("relu", np.where(mask, x.data, 0.0), (x,), lambda g, need: (g * mask,))


def sigmoid(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    s = expit(x.data)
    return _emit("sigmoid", s, (x,), lambda g, need: (g * s * (1.0 - s),))


def reduce_sum(x: TensorLike, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    shape = x.shape

    def vjp(g, need):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return _emit("sum", np.sum(x.data, axis=axis), (x,), vjp)


def reduce_mean(x: TensorLike, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    shape = x.shape
    count = x.size if axis is None else shape[axis]

    def vjp(g, need):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, shape),)

    return _emit("mean", np.mean(x.data, axis=axis), (x,), vjp)


def square(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    X = x.data
    return _emit("square", X * X, (x,), lambda g, need: (2.0 * X * g,))


def concat(tensors: Sequence[TensorLike], axis: int = 0) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)
    if not parts:
        raise ShapeError("concat: no operands")
    ref = parts[0].shape
    ax = axis % len(ref)
    for p in parts[1:]:
        if p.ndim != len(ref) or any(p.shape[d] != ref[d] for d in range(len(ref)) if d != ax):
            raise ShapeError(f"concat: shape mismatch {ref} vs {p.shape} along axis {axis}")
    splits = np.cumsum([p.shape[ax] for p in parts])[:-1]

    def vjp(g, need):
        return tuple(np.split(g, splits, axis=ax))

    return _emit("concat", np.concatenate([p.data for p in parts], axis=ax), parts, vjp)


def index(x: TensorLike, key) -> Tensor:
    """Slice or gather from ``x`` with numpy indexing; gradients scatter back."""
    x = as_tensor(x)
    shape = x.shape

    def vjp(g, need):
        full = np.zeros(shape)
        np.add.at(full, key, g)
        return (full,)

    return _emit("slice", np.array(x.data[key]), (x,), vjp)


def broadcast_to(x: TensorLike, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    shape = tuple(shape)
    try:
        out = np.broadcast_to(x.data, shape).copy()
    except ValueError:
        raise ShapeError(f"broadcast_to: cannot broadcast {x.shape} to {shape}") from None
    src = x.shape

    def vjp(g, need):
        lead = g.ndim - len(src)
        if lead:
            g = g.sum(axis=tuple(range(lead)))
        axes = tuple(i for i, n in enumerate(src) if n == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
        return (g,)

    return _emit("broadcast", out, (x,), vjp)


# ---------------------------------------------------------------------------
# Composites
# ---------------------------------------------------------------------------

def scale(x: TensorLike, c: float) -> Tensor:
    x = as_tensor(x)
    return mul(x, Tensor(np.full(x.shape, float(c)), copy=False))


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    return add(a, scale(b, -1.0))


def mse(a: TensorLike, b: TensorLike) -> Tensor:
    """Mean of squared elementwise differences."""
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mse", a, b)
    return reduce_mean(square(sub(a, b)))


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight)
    if bias is None:
        return out
    return add(out, broadcast_to(bias, out.shape))


# ---------------------------------------------------------------------------
# Reverse pass
# ---------------------------------------------------------------------------

def backward(loss: Tensor, params: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
    """Gradients of a scalar traced ``loss`` with respect to each named parameter.

    Parameters the loss does not depend on get a zero gradient.
    """
    if loss.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    tape = loss.tape
    start = tape.position(loss) if tape is not None else None
    if start is None:
        raise ValueError("backward: loss is not on a gradient tape "
                         "(compute it inside trace() from parameters)")

    adjoints: Dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
    for rec in reversed(tape.records[: start + 1]):
        g = adjoints.pop(id(rec.out), None)
        if g is None:
            continue
        need = tuple(i.requires_grad for i in rec.inputs)
        for inp, needed, gi in zip(rec.inputs, need, rec.vjp(g, need)):
            if not needed or gi is None:
                continue
            key = id(inp)
            adjoints[key] = adjoints[key] + gi if key in adjoints else gi

    grads = {}
    for name, p in params.items():
        g = adjoints.get(id(p))
        grads[name] = np.zeros(p.shape) if g is None else np.array(g, dtype=np.float64).reshape(p.shape)
    return grads
