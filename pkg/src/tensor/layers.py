"""Parameterized layers built on the tensor primitives."""
from __future__ import annotations

from collections import OrderedDict
from typing import Any, Iterator, Optional

import numpy as np

from ..utils.errors import ShapeMismatchError
from . import ops
from .tensor import Tensor, concat


class Parameter(Tensor):
    """Trainable leaf tensor."""

    def __init__(self, data: np.ndarray):
        super().__init__(data, requires_grad=True)


class Module:
    """Container that tracks parameters and submodules assigned as attributes."""

    def __init__(self) -> None:
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "training", True)

    def __setattr__(self, name: str, value: Any) -> None:
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args: Any, **kwargs: Any) -> Tensor:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Tensor:
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, param in self._parameters.items():
            yield f"{prefix}{name}", param
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix=f"{prefix}{name}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for module in self._modules.values():
            yield from module.modules()

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            object.__setattr__(module, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.grad = None

    def astype(self, dtype: np.dtype) -> "Module":
        for param in self.parameters():
            param.data = param.data.astype(dtype)
            param.grad = None
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ShapeMismatchError(
                f"State does not match model: missing {missing}, unexpected {unexpected}"
            )
        for name, param in own.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise ShapeMismatchError(
                    f"Parameter {name}: expected {param.shape}, got {value.shape}"
                )
            param.data = value.astype(param.dtype).copy()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


class ModuleList(Module):
    def __init__(self, modules: Optional[list[Module]] = None):
        super().__init__()
        self._items: list[Module] = []
        for module in modules or []:
            self.append(module)

    def append(self, module: Module) -> None:
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]


def _kaiming(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(np.float32)


class Dense(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.weight = Parameter(_kaiming(rng, (in_features, out_features), in_features))
        self.bias = Parameter(np.zeros(out_features, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        return ops.dense(x, self.weight, self.bias)


class Conv1d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.stride, self.padding = stride, padding
        fan_in = kernel_size * in_channels
        self.weight = Parameter(
            _kaiming(rng, (kernel_size, in_channels, out_channels), fan_in)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv1d(x, self.weight, self.stride, self.padding) + self.bias


class ConvTranspose1d(Module):
    """Time-axis transposed convolution, computed as a ``[B, T, 1, C]`` 2-D transpose."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.stride, self.padding = stride, padding
        self.weight = Parameter(
            _kaiming(rng, (kernel_size, in_channels, out_channels), in_channels)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        b, t, c = x.shape
        k, _, c_out = self.weight.shape
        y = ops.transposed_conv2d(
            x.reshape(b, t, 1, c),
            self.weight.reshape(k, 1, c, c_out),
            stride=(self.stride, 1),
            padding=(self.padding, 0),
        )
        return y.reshape(b, y.shape[1], c_out) + self.bias


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.stride, self.padding = stride, padding
        fan_in = kernel_size * kernel_size * in_channels
        self.weight = Parameter(
            _kaiming(rng, (kernel_size, kernel_size, in_channels, out_channels), fan_in)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.stride, self.padding) + self.bias


class ConvTranspose2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.stride, self.padding = stride, padding
        # each output pixel sees roughly K*K/stride^2 input taps
        fan_in = max(1, (kernel_size * kernel_size * in_channels) // (stride * stride))
        self.weight = Parameter(
            _kaiming(rng, (kernel_size, kernel_size, in_channels, out_channels), fan_in)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        return ops.transposed_conv2d(x, self.weight, self.stride, self.padding) + self.bias


class Dropout(Module):
    """Inverted dropout; the mask stream is owned by the layer so runs replay exactly."""

    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"Dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        if not self.training or self.rate == 0.0:
            return x
        keep = self.rng.random(x.shape) >= self.rate
        return x * Tensor(keep / (1.0 - self.rate), dtype=x.dtype)


class DenseBlock1d(Module):
    """Layers that each see the concatenation of the block input and all earlier outputs."""

    def __init__(
        self,
        in_channels: int,
        growth: int,
        num_layers: int,
        rng: np.random.Generator,
        alpha: float = 0.2,
    ):
        super().__init__()
        self.alpha = alpha
        self.layers = ModuleList(
            [Conv1d(in_channels + i * growth, growth, 3, rng, padding=1) for i in range(num_layers)]
        )
        self.out_channels = in_channels + num_layers * growth

    def forward(self, x: Tensor) -> Tensor:
        features = x
        for layer in self.layers:
            new = ops.leaky_relu(layer(features), self.alpha)
            features = concat([features, new], axis=-1)
        return features
