"""Dense tensor engine with reverse-mode differentiation."""
from .gradcheck import grad_check
from .layers import (
    Conv1d,
    Conv2d,
    ConvTranspose1d,
    ConvTranspose2d,
    Dense,
    DenseBlock1d,
    Dropout,
    Module,
    ModuleList,
    Parameter,
)
from .ops import (
    batch_stats,
    conv1d,
    conv2d,
    dense,
    leaky_relu,
    relu,
    sigmoid,
    skip_concat,
    tanh,
    transposed_conv2d,
)
from .optim import Adam, AdamState, adam_step
from .tensor import Function, Tape, Tensor, as_tensor, concat, is_grad_enabled, no_grad

__all__ = [
    "Adam",
    "AdamState",
    "Conv1d",
    "Conv2d",
    "ConvTranspose1d",
    "ConvTranspose2d",
    "Dense",
    "DenseBlock1d",
    "Dropout",
    "Function",
    "Module",
    "ModuleList",
    "Parameter",
    "Tape",
    "Tensor",
    "adam_step",
    "as_tensor",
    "batch_stats",
    "concat",
    "conv1d",
    "conv2d",
    "dense",
    "grad_check",
    "is_grad_enabled",
    "leaky_relu",
    "no_grad",
    "relu",
    "sigmoid",
    "skip_concat",
    "tanh",
    "transposed_conv2d",
]
