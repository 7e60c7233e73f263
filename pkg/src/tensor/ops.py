"""Differentiable layer primitives: dense, convolutions, activations, batch statistics.

All spatial tensors are channel-last: ``[B, T, C]`` for sequences and
``[B, H, W, C]`` for images.
"""
from __future__ import annotations

from typing import Optional, Union

import numpy as np

from ..utils.errors import ShapeMismatchError
from .tensor import Function, Tensor, concat

IntPair = Union[int, tuple[int, int]]


def _pair(value: IntPair) -> tuple[int, int]:
    if isinstance(value, tuple):
        return value
    return (value, value)


def _out_len(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


class Dense(Function):
    def forward(self, x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
            raise ShapeMismatchError(f"dense: cannot multiply {x.shape} by {w.shape}")
        if b.shape != (w.shape[1],):
            raise ShapeMismatchError(f"dense: bias shape {b.shape} does not match {w.shape[1]}")
        self.saved["x"], self.saved["w"] = x, w
        return x @ w + b

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        x, w = self.saved["x"], self.saved["w"]
        return grad @ w.T, x.T @ grad, grad.sum(axis=0)


class Conv1d(Function):
    def forward(
        self, x: np.ndarray, kernel: np.ndarray, stride: int, padding: int
    ) -> np.ndarray:
        if x.ndim != 3 or kernel.ndim != 3 or x.shape[2] != kernel.shape[1]:
            raise ShapeMismatchError(
                f"conv1d: input {x.shape} incompatible with kernel {kernel.shape}"
            )
        k = kernel.shape[0]
        t_out = _out_len(x.shape[1], k, stride, padding)
        if t_out < 1:
            raise ShapeMismatchError(
                f"conv1d: length {x.shape[1]} with kernel {k}, stride {stride}, "
                f"padding {padding} gives empty output"
            )
        xp = np.pad(x, ((0, 0), (padding, padding), (0, 0)))
        span = stride * (t_out - 1) + 1
        out = np.zeros((x.shape[0], t_out, kernel.shape[2]), dtype=x.dtype)
        for i in range(k):
            out += xp[:, i : i + span : stride, :] @ kernel[i]
        self.saved.update(xp=xp, kernel=kernel, stride=stride, padding=padding, span=span)
        return out

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        xp, kernel = self.saved["xp"], self.saved["kernel"]
        stride, padding, span = self.saved["stride"], self.saved["padding"], self.saved["span"]
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kernel)
        for i in range(kernel.shape[0]):
            window = xp[:, i : i + span : stride, :]
            gxp[:, i : i + span : stride, :] += grad @ kernel[i].T
            gk[i] = np.einsum("btc,btd->cd", window, grad)
        gx = gxp[:, padding : gxp.shape[1] - padding, :]
        return gx, gk


class Conv2d(Function):
    def forward(
        self, x: np.ndarray, kernel: np.ndarray, stride: IntPair, padding: IntPair
    ) -> np.ndarray:
        if x.ndim != 4 or kernel.ndim != 4 or x.shape[3] != kernel.shape[2]:
            raise ShapeMismatchError(
                f"conv2d: input {x.shape} incompatible with kernel {kernel.shape}"
            )
        (sh, sw), (ph, pw) = _pair(stride), _pair(padding)
        kh, kw = kernel.shape[:2]
        h_out = _out_len(x.shape[1], kh, sh, ph)
        w_out = _out_len(x.shape[2], kw, sw, pw)
        if h_out < 1 or w_out < 1:
            raise ShapeMismatchError(f"conv2d: input {x.shape} too small for kernel {kernel.shape}")
        xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
        span_h, span_w = sh * (h_out - 1) + 1, sw * (w_out - 1) + 1
        out = np.zeros((x.shape[0], h_out, w_out, kernel.shape[3]), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                out += xp[:, i : i + span_h : sh, j : j + span_w : sw, :] @ kernel[i, j]
        self.saved.update(
            xp=xp, kernel=kernel, stride=(sh, sw), padding=(ph, pw), span=(span_h, span_w)
        )
        return out

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        xp, kernel = self.saved["xp"], self.saved["kernel"]
        (sh, sw), (ph, pw) = self.saved["stride"], self.saved["padding"]
        span_h, span_w = self.saved["span"]
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kernel)
        for i in range(kernel.shape[0]):
            for j in range(kernel.shape[1]):
                rows, cols = slice(i, i + span_h, sh), slice(j, j + span_w, sw)
                gxp[:, rows, cols, :] += grad @ kernel[i, j].T
                gk[i, j] = np.tensordot(xp[:, rows, cols, :], grad, axes=([0, 1, 2], [0, 1, 2]))
        gx = gxp[:, ph : gxp.shape[1] - ph, pw : gxp.shape[2] - pw, :]
        return gx, gk


class TransposedConv2d(Function):
    """Gradient of ``conv2d`` with respect to its input, used as an upsampler.

    Output size is ``(H - 1) * stride + K - 2 * padding`` per spatial axis.
    """

    def forward(
        self, x: np.ndarray, kernel: np.ndarray, stride: IntPair, padding: IntPair
    ) -> np.ndarray:
        if x.ndim != 4 or kernel.ndim != 4 or x.shape[3] != kernel.shape[2]:
            raise ShapeMismatchError(
                f"transposed_conv2d: input {x.shape} incompatible with kernel {kernel.shape}"
            )
        (sh, sw), (ph, pw) = _pair(stride), _pair(padding)
        kh, kw = kernel.shape[:2]
        b, h, w, _ = x.shape
        full_h, full_w = (h - 1) * sh + kh, (w - 1) * sw + kw
        if full_h - 2 * ph < 1 or full_w - 2 * pw < 1:
            raise ShapeMismatchError(
                f"transposed_conv2d: padding {padding} crops away the whole output"
            )
        span_h, span_w = sh * (h - 1) + 1, sw * (w - 1) + 1
        full = np.zeros((b, full_h, full_w, kernel.shape[3]), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                full[:, i : i + span_h : sh, j : j + span_w : sw, :] += x @ kernel[i, j]
        self.saved.update(
            x=x, kernel=kernel, stride=(sh, sw), padding=(ph, pw), span=(span_h, span_w)
        )
        return full[:, ph : full_h - ph, pw : full_w - pw, :]

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        x, kernel = self.saved["x"], self.saved["kernel"]
        (sh, sw), (ph, pw) = self.saved["stride"], self.saved["padding"]
        span_h, span_w = self.saved["span"]
        gfull = np.pad(grad, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
        gx = np.zeros_like(x)
        gk = np.zeros_like(kernel)
        for i in range(kernel.shape[0]):
            for j in range(kernel.shape[1]):
                window = gfull[:, i : i + span_h : sh, j : j + span_w : sw, :]
                gx += window @ kernel[i, j].T
                gk[i, j] = np.tensordot(x, window, axes=([0, 1, 2], [0, 1, 2]))
        return gx, gk


class ReLU(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.saved["mask"] = x > 0
        return np.where(self.saved["mask"], x, 0).astype(x.dtype)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.saved["mask"],)


class LeakyReLU(Function):
    def forward(self, x: np.ndarray, alpha: float) -> np.ndarray:
        slope = np.where(x > 0, 1.0, alpha).astype(x.dtype)
        self.saved["slope"] = slope
        return x * slope

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        return (grad * self.saved["slope"],)


class Tanh(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        y = np.tanh(x)
        self.saved["y"] = y
        return y

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        y = self.saved["y"]
        return (grad * (1 - y * y),)


class Sigmoid(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        # tanh form avoids overflow in exp for large |x|
        y = 0.5 * (1 + np.tanh(0.5 * x))
        self.saved["y"] = y
        return y.astype(x.dtype)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        y = self.saved["y"]
        return (grad * y * (1 - y),)


class BatchStats(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2:
            raise ShapeMismatchError(f"batch_stats expects [B, F], got {x.shape}")
        if x.shape[0] < 1:
            raise ShapeMismatchError("batch_stats needs a non-empty batch")
        lo, hi = np.argmin(x, axis=0), np.argmax(x, axis=0)
        cols = np.arange(x.shape[1])
        self.saved.update(shape=x.shape, lo=lo, hi=hi, cols=cols, dtype=x.dtype)
        return np.stack([x[lo, cols], x[hi, cols], x.mean(axis=0)]).astype(x.dtype)

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        shape, cols = self.saved["shape"], self.saved["cols"]
        gx = np.broadcast_to(grad[2] / shape[0], shape).astype(self.saved["dtype"])
        np.add.at(gx, (self.saved["lo"], cols), grad[0])
        np.add.at(gx, (self.saved["hi"], cols), grad[1])
        return (gx,)


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """``x @ w + b`` for ``x`` of shape ``[B, I]``."""
    return Dense.apply(x, w, b)


def conv1d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation along time; ``x`` is ``[B, T, C]``, ``kernel`` is ``[K, C, C']``."""
    return Conv1d.apply(x, kernel, stride=stride, padding=padding)


def conv2d(x: Tensor, kernel: Tensor, stride: IntPair = 1, padding: IntPair = 0) -> Tensor:
    """2-D cross-correlation; ``x`` is ``[B, H, W, C]``, ``kernel`` is ``[KH, KW, C, C']``."""
    return Conv2d.apply(x, kernel, stride=stride, padding=padding)


def transposed_conv2d(
    x: Tensor, kernel: Tensor, stride: IntPair = 1, padding: IntPair = 0
) -> Tensor:
    return TransposedConv2d.apply(x, kernel, stride=stride, padding=padding)


def relu(x: Tensor) -> Tensor:
    return ReLU.apply(x)


def leaky_relu(x: Tensor, alpha: float = 0.2) -> Tensor:
    return LeakyReLU.apply(x, alpha=alpha)


def tanh(x: Tensor) -> Tensor:
    return Tanh.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def batch_stats(x: Tensor) -> Tensor:
    """Per-feature min, max and mean across the batch, stacked as ``[3, F]``.

    Min and max gradients go to the first batch index attaining them.
    """
    return BatchStats.apply(x)


def skip_concat(x: Tensor, skip: Tensor) -> Tensor:
    """Join a decoder tensor with its mirror encoder tensor along channels."""
    if x.shape[:-1] != skip.shape[:-1]:
        raise ShapeMismatchError(f"skip connection misaligned: {x.shape} vs {skip.shape}")
    return concat([x, skip], axis=-1)
