"""Finite-difference verification of tape gradients."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..utils.errors import NonFiniteError, ShapeMismatchError
from .tensor import Tensor, no_grad


def _evaluate(f: Callable[[], Tensor]) -> float:
    out = f()
    if out.size != 1:
        raise ShapeMismatchError(f"grad_check objective must be scalar, got shape {out.shape}")
    value = float(out.data.reshape(-1)[0])
    if not np.isfinite(value):
        raise NonFiniteError("grad_check objective is not finite")
    return value


def grad_check(
    f: Callable[[], Tensor],
    leaves: Sequence[Tensor],
    h: float = 1e-4,
    max_checks_per_leaf: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Return the largest relative error between tape and central-difference gradients.

    ``f`` is re-evaluated after each in-place perturbation of a leaf, so it must
    read the leaves rather than copies of them. The error for one leaf is
    ``|g_tape - g_num| / max(|g_tape|, |g_num|)`` over the checked coordinates;
    a leaf with both gradients zero scores 0. When ``max_checks_per_leaf`` is
    set, that many coordinates per leaf are sampled with ``rng``.
    """
    for leaf in leaves:
        leaf.data = np.ascontiguousarray(leaf.data)
        leaf.grad = None
    out = f()
    if out.size != 1:
        raise ShapeMismatchError(f"grad_check objective must be scalar, got shape {out.shape}")
    if not np.all(np.isfinite(out.data)):
        raise NonFiniteError("grad_check objective is not finite")
    out.backward()

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for leaf in leaves:
        analytic = np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad
        flat = leaf.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_checks_per_leaf is not None and flat.size > max_checks_per_leaf:
            indices = rng.choice(flat.size, size=max_checks_per_leaf, replace=False)

        numeric = np.zeros(len(indices))
        with no_grad():
            for n, idx in enumerate(indices):
                original = flat[idx]
                flat[idx] = original + h
                plus = _evaluate(f)
                flat[idx] = original - h
                minus = _evaluate(f)
                flat[idx] = original
                numeric[n] = (plus - minus) / (2 * h)

        tape = analytic.reshape(-1)[indices]
        scale = max(float(np.linalg.norm(tape)), float(np.linalg.norm(numeric)))
        if scale == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(tape - numeric)) / scale)
    return worst
