"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a numpy array. Every differentiable primitive is a
``Function`` subclass; applying one records the function as the creator of its
output. ``Tensor.backward`` replays the recorded operations in reverse order
through a ``Tape``.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Any, Iterator, Optional, Sequence, Union

import numpy as np

from ..utils.errors import NonFiniteError, ShapeMismatchError

DEFAULT_DTYPE = np.float32

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Run forward passes without recording operations (per thread)."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def check_finite(array: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"{where} produced non-finite values")


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes that broadcasting expanded to reach ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """Base class for differentiable primitives.

    ``forward`` receives raw arrays and may stash what ``backward`` needs in
    ``self.saved``. ``backward`` returns one gradient (or None) per input.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs
        self.saved: dict[str, Any] = {}

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no forward pass")

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__} has no backward pass")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        fn = cls(*inputs)
        out = fn.forward(*(t.data for t in inputs), **kwargs)
        check_finite(out, cls.__name__)
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=fn if requires_grad else None)


class Tensor:
    """N-dimensional array with optional gradient tracking."""

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Optional[Function] = None,
        dtype: Optional[np.dtype] = None,
    ):
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(DEFAULT_DTYPE)
        self.data = array
        self.requires_grad = requires_grad
        self.creator = creator
        self.grad: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        Tape(self).backward(grad)

    # Arithmetic

    def __add__(self, other: Union["Tensor", float]) -> "Tensor":
        return Add.apply(self, as_tensor(other, self.dtype))

    def __radd__(self, other: Union["Tensor", float]) -> "Tensor":
        return Add.apply(as_tensor(other, self.dtype), self)

    def __sub__(self, other: Union["Tensor", float]) -> "Tensor":
        return Sub.apply(self, as_tensor(other, self.dtype))

    def __rsub__(self, other: Union["Tensor", float]) -> "Tensor":
        return Sub.apply(as_tensor(other, self.dtype), self)

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        return Mul.apply(self, as_tensor(other, self.dtype))

    def __rmul__(self, other: Union["Tensor", float]) -> "Tensor":
        return Mul.apply(as_tensor(other, self.dtype), self)

    def __truediv__(self, other: Union["Tensor", float]) -> "Tensor":
        return Div.apply(self, as_tensor(other, self.dtype))

    def __neg__(self) -> "Tensor":
        return Mul.apply(self, as_tensor(-1.0, self.dtype))

    def __getitem__(self, index: Any) -> "Tensor":
        return GetItem.apply(self, index=index)

    def sum(
        self, axis: Union[int, tuple[int, ...], None] = None, keepdims: bool = False
    ) -> "Tensor":
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(
        self, axis: Union[int, tuple[int, ...], None] = None, keepdims: bool = False
    ) -> "Tensor":
        total = self.sum(axis=axis, keepdims=keepdims)
        count = self.size // max(total.size, 1)
        return total * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def abs(self) -> "Tensor":
        return Abs.apply(self)

    def log(self) -> "Tensor":
        return Log.apply(self)

    def clamp(self, low: float, high: float) -> "Tensor":
        return Clamp.apply(self, low=low, high=high)


def as_tensor(value: Union[Tensor, ArrayLike], dtype: Optional[np.dtype] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


class Tape:
    """Ordered record of the operations that produced ``root``.

    Entries are in topological order (inputs before consumers); backward
    evaluation walks them in reverse so each node's gradient is complete before
    it is propagated further.
    """

    def __init__(self, root: Tensor):
        self.root = root
        self.entries = self._record(root)

    @staticmethod
    def _record(root: Tensor) -> list[Tensor]:
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if node.creator is not None:
                for parent in node.creator.inputs:
                    if parent.requires_grad and id(parent) not in seen:
                        stack.append((parent, False))
        return order

    def __len__(self) -> int:
        return len(self.entries)

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        root = self.root
        if not root.requires_grad:
            raise RuntimeError("backward() called on a tensor that does not require gradients")
        if seed is None:
            if root.size != 1:
                raise ShapeMismatchError(
                    f"backward() without a seed needs a scalar, got shape {root.shape}"
                )
            seed = np.ones_like(root.data)
        pending: dict[int, np.ndarray] = {id(root): np.asarray(seed, dtype=root.dtype)}
        for node in reversed(self.entries):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node.creator is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            input_grads = node.creator.backward(grad)
            for parent, parent_grad in zip(node.creator.inputs, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                check_finite(parent_grad, f"backward of {type(node.creator).__name__}")
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad


# Elementwise arithmetic


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.saved["shapes"] = (a.shape, b.shape)
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        sa, sb = self.saved["shapes"]
        return unbroadcast(grad, sa), unbroadcast(grad, sb)


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.saved["shapes"] = (a.shape, b.shape)
        return a - b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        sa, sb = self.saved["shapes"]
        return unbroadcast(grad, sa), unbroadcast(-grad, sb)


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.saved["a"], self.saved["b"] = a, b
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        a, b = self.saved["a"], self.saved["b"]
        return unbroadcast(grad * b, a.shape), unbroadcast(grad * a, b.shape)


class Div(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.saved["a"], self.saved["b"] = a, b
        return a / b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        a, b = self.saved["a"], self.saved["b"]
        return unbroadcast(grad / b, a.shape), unbroadcast(-grad * a / (b * b), b.shape)


class Abs(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.saved["sign"] = np.sign(x)
        return np.abs(x)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.saved["sign"],)


class Log(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.saved["x"] = x
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(x)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad / self.saved["x"],)


class Clamp(Function):
    def forward(self, x: np.ndarray, low: float, high: float) -> np.ndarray:
        self.saved["inside"] = (x >= low) & (x <= high)
        return np.clip(x, low, high)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.saved["inside"],)


# Shape manipulation and reductions


class Sum(Function):
    def forward(
        self, x: np.ndarray, axis: Union[int, tuple[int, ...], None], keepdims: bool
    ) -> np.ndarray:
        self.saved.update(shape=x.shape, axis=axis, keepdims=keepdims)
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        shape, axis, keepdims = self.saved["shape"], self.saved["axis"], self.saved["keepdims"]
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, shape).copy(),)


class Reshape(Function):
    def forward(self, x: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
        self.saved["shape"] = x.shape
        try:
            return x.reshape(shape)
        except ValueError as e:
            raise ShapeMismatchError(f"Cannot reshape {x.shape} to {shape}") from e

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad.reshape(self.saved["shape"]),)


class GetItem(Function):
    def forward(self, x: np.ndarray, index: Any) -> np.ndarray:
        self.saved.update(shape=x.shape, index=index, dtype=x.dtype)
        return np.array(x[index])

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        out = np.zeros(self.saved["shape"], dtype=self.saved["dtype"])
        np.add.at(out, self.saved["index"], grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int) -> np.ndarray:
        reference = arrays[0].shape
        for a in arrays[1:]:
            if a.ndim != len(reference) or any(
                d1 != d2 for i, (d1, d2) in enumerate(zip(a.shape, reference)) if i != axis % a.ndim
            ):
                raise ShapeMismatchError(
                    f"Cannot concatenate shapes {reference} and {a.shape} along axis {axis}"
                )
        self.saved["sizes"] = [a.shape[axis] for a in arrays]
        self.saved["axis"] = axis
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        bounds = np.cumsum(self.saved["sizes"])[:-1]
        return tuple(np.split(grad, bounds, axis=self.saved["axis"]))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeMismatchError("concat needs at least one tensor")
    return Concat.apply(*tensors, axis=axis)
