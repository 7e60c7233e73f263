"""Tests for the gradient-check suite."""
import numpy as np
import pytest

from src.agents.gradcheck_agent import (
    NETWORK_TOLERANCE,
    PRIMITIVE_TOLERANCE,
    network_cases,
    primitive_cases,
    run_gradcheck_suite,
)


@pytest.fixture(scope="module")
def results():
    """One run of the full suite."""
    return run_gradcheck_suite(seed=0)


class TestGradCheckSuite:
    """Test the finite-difference suite over primitives and networks."""

    def test_covers_primitives_and_networks(self, results):
        """Test every case runs once."""
        names = [r.name for r in results]
        assert len(names) == len(set(names)) == 27
        assert {
            "trajectory_generator",
            "trajectory_discriminator",
            "frame_generator",
            "frame_discriminator",
        } <= set(names)
        assert {"conv2d", "transposed_conv2d", "batch_stats", "skip_concat"} <= set(names)

    def test_all_pass(self, results):
        """Test analytic gradients agree with finite differences."""
        failed = [(r.name, r.max_rel_error) for r in results if not r.passed]
        assert failed == []
        networks = {
            "trajectory_generator",
            "trajectory_discriminator",
            "frame_generator",
            "frame_discriminator",
        }
        for r in results:
            assert r.tolerance == (NETWORK_TOLERANCE if r.name in networks else PRIMITIVE_TOLERANCE)

    def test_primitive_bound(self, results):
        """Test primitives are held to 1e-5 and networks to 1e-4."""
        assert PRIMITIVE_TOLERANCE == 1e-5 and NETWORK_TOLERANCE == 1e-4
        assert sum(r.tolerance == 1e-5 for r in results) == 23

    def test_tolerance_is_applied(self):
        """Test a negative tolerance fails every case."""
        assert not any(r.passed for r in run_gradcheck_suite(seed=0, tolerance=-1.0))

    def test_cases_are_scalar(self):
        """Test each objective reduces to one value."""
        rng = np.random.default_rng(0)
        for name, objective, leaves in primitive_cases(rng) + network_cases(rng):
            assert objective().data.size == 1, name
            assert leaves, name
