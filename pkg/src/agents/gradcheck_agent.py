"""Gradient-check suite over the tensor primitives and the full networks."""
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..models.frame_networks import PatchDiscriminator, UNetGenerator
from ..models.trajectory_networks import TrajectoryDiscriminator, TrajectoryGenerator
from ..schemas.models import (
    FrameDiscriminatorConfig,
    FrameGeneratorConfig,
    GradCheckResult,
    TrajDiscriminatorConfig,
    TrajGeneratorConfig,
)
from ..tensor import ops
from ..tensor.gradcheck import grad_check
from ..tensor.layers import Module
from ..tensor.tensor import Tensor, concat
from ..utils.rng import derive_rng

Case = Tuple[str, Callable[[], Tensor], Sequence[Tensor]]

PRIMITIVE_TOLERANCE = 1e-5
NETWORK_TOLERANCE = 1e-4
STEP = 1e-4
MAX_CHECKS = 24


def _leaf(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True, dtype=np.float64)


def _weighted(out: Tensor, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
    """Scalarize with fixed random weights so every output entry matters."""
    w = Tensor(rng.uniform(-1.0, 1.0, size=out.shape), dtype=np.float64)
    return lambda y: (y * w).sum()


def _case(name: str, build: Callable[[], Tensor], leaves: Sequence[Tensor], rng) -> Case:
    scalarize = _weighted(build(), rng)
    return name, lambda: scalarize(build()), leaves


def primitive_cases(rng: np.random.Generator) -> List[Case]:
    a, b = _leaf(rng, 3, 4), _leaf(rng, 3, 4)
    pos = _leaf(rng, 3, 4, low=0.5, high=2.0)
    # magnitudes kept away from the kinks at 0 and at the clamp bounds
    signed = Tensor(
        rng.choice([-1.0, 1.0], size=(3, 4)) * rng.uniform(0.2, 1.0, size=(3, 4)),
        requires_grad=True,
        dtype=np.float64,
    )
    row = _leaf(rng, 4)
    x_dense, w_dense, b_dense = _leaf(rng, 3, 5), _leaf(rng, 5, 4), _leaf(rng, 4)
    x1, k1 = _leaf(rng, 2, 7, 3), _leaf(rng, 3, 3, 4)
    x2, k2 = _leaf(rng, 2, 6, 6, 2), _leaf(rng, 3, 3, 2, 3)
    xt, kt = _leaf(rng, 2, 3, 3, 2), _leaf(rng, 4, 4, 2, 3)
    batch = _leaf(rng, 4, 5)
    skip = _leaf(rng, 2, 3, 3, 2)

    specs: List[Tuple[str, Callable[[], Tensor], Sequence[Tensor]]] = [
        ("add_broadcast", lambda: a + row, [a, row]),
        ("sub", lambda: a - b, [a, b]),
        ("mul", lambda: a * b, [a, b]),
        ("div", lambda: a / pos, [a, pos]),
        ("neg", lambda: -a, [a]),
        ("abs", lambda: signed.abs(), [signed]),
        ("log", lambda: pos.log(), [pos]),
        ("clamp", lambda: signed.clamp(-0.6, 0.6), [signed]),
        ("sum_axis", lambda: a.sum(axis=0), [a]),
        ("mean_keepdims", lambda: a.mean(axis=1, keepdims=True), [a]),
        ("reshape", lambda: a.reshape(4, 3), [a]),
        ("getitem", lambda: a[1:, ::2], [a]),
        ("concat", lambda: concat([a, b], axis=0), [a, b]),
        ("dense", lambda: ops.dense(x_dense, w_dense, b_dense), [x_dense, w_dense, b_dense]),
        ("conv1d", lambda: ops.conv1d(x1, k1, stride=2, padding=1), [x1, k1]),
        ("conv2d", lambda: ops.conv2d(x2, k2, stride=2, padding=1), [x2, k2]),
        ("transposed_conv2d", lambda: ops.transposed_conv2d(xt, kt, stride=2, padding=1), [xt, kt]),
        ("relu", lambda: ops.relu(signed), [signed]),
        ("leaky_relu", lambda: ops.leaky_relu(signed, 0.2), [signed]),
        ("tanh", lambda: ops.tanh(a), [a]),
        ("sigmoid", lambda: ops.sigmoid(a), [a]),
        ("batch_stats", lambda: ops.batch_stats(batch), [batch]),
        ("skip_concat", lambda: ops.skip_concat(xt, skip), [xt, skip]),
    ]
    return [_case(name, build, leaves, rng) for name, build, leaves in specs]


def _network_case(
    name: str, module: Module, forward: Callable[[], Tensor], inputs: Sequence[Tensor], rng
) -> Case:
    module.astype(np.float64)
    module.eval()
    return _case(name, forward, [*inputs, *module.parameters()], rng)


def network_cases(rng: np.random.Generator) -> List[Case]:
    traj_g = TrajectoryGenerator(
        TrajGeneratorConfig(
            num_labels=2, noise_channels=4, stem_channels=4, growth=2, block_layers=1
        ),
        rng,
    )
    z = _leaf(rng, 2, 8, 1, 6)

    traj_d = TrajectoryDiscriminator(
        TrajDiscriminatorConfig(num_labels=2, trunk_channels=4, traj_channels=8, batch_hidden=4),
        rng,
    )
    seq = _leaf(rng, 3, 8, 1, 36, low=0.0, high=1.0)
    labels = np.array([0, 1, 1])

    frame_g = UNetGenerator(
        FrameGeneratorConfig(in_channels=5, levels=2, base_channels=4, max_channels=8, dropout=0.0),
        rng,
    )
    cond = _leaf(rng, 1, 8, 8, 5, low=0.0, high=1.0)

    frame_d = PatchDiscriminator(
        FrameDiscriminatorConfig(in_channels=8, base_channels=4, max_channels=8, layers=2), rng
    )
    frame = _leaf(rng, 1, 8, 8, 3, low=0.0, high=1.0)

    return [
        _network_case("trajectory_generator", traj_g, lambda: traj_g(z), [z], rng),
        _network_case(
            "trajectory_discriminator",
            traj_d,
            lambda: traj_d(seq, labels).total,
            [seq],
            rng,
        ),
        _network_case("frame_generator", frame_g, lambda: frame_g(cond), [cond], rng),
        _network_case(
            "frame_discriminator", frame_d, lambda: frame_d(cond, frame), [cond, frame], rng
        ),
    ]


def run_gradcheck_suite(
    seed: int = 0, tolerance: Optional[float] = None
) -> List[GradCheckResult]:
    """Check every primitive and each network at 64-bit precision.

    Primitives must agree within ``PRIMITIVE_TOLERANCE`` and whole networks within
    ``NETWORK_TOLERANCE``; an explicit ``tolerance`` applies to every case.
    """
    rng = derive_rng(seed, "gradcheck")
    cases = [(case, PRIMITIVE_TOLERANCE) for case in primitive_cases(rng)]
    cases += [(case, NETWORK_TOLERANCE) for case in network_cases(rng)]
    results = []
    for (name, objective, leaves), bound in cases:
        bound = bound if tolerance is None else tolerance
        error = grad_check(
            objective,
            leaves,
            h=STEP,
            max_checks_per_leaf=MAX_CHECKS,
            rng=derive_rng(seed, f"gradcheck.{name}"),
        )
        result = GradCheckResult(
            name=name, max_rel_error=error, tolerance=bound, passed=error <= bound
        )
        log = logger.info if result.passed else logger.error
        log(f"grad_check {name}: {error:.2e} ({'ok' if result.passed else 'FAILED'})")
        results.append(result)
    return results
