"""Tests for rate monitoring, the gradient-projection step and convergence."""

from collections.abc import Callable
import math

import numpy as np
from pydantic import ValidationError
import pytest

from app.services.balancer.errors import BalancerUsageError
from app.services.balancer.load import (
    DelaySample,
    PathLoad,
    balance_step,
    convergence_gap,
    monitor,
    project_simplex,
)

Congestion = Callable[[np.ndarray], np.ndarray]


def linear_marginal(a: tuple[float, ...], b: tuple[float, ...]) -> Congestion:
    """c_i = a_i + b_i·r_i."""
    return lambda r: np.asarray(a) + np.asarray(b) * r


def quadratic_marginal(a: tuple[float, ...], b: tuple[float, ...]) -> Congestion:
    """c_i = a_i + b_i·r_i²."""
    return lambda r: np.asarray(a) + np.asarray(b) * r**2


def mm1_marginal(mu: tuple[float, ...], total: float) -> Congestion:
    """Marginal delay of 1/(μ_i − r_i·Λ) with respect to r_i."""
    return lambda r: total / (np.asarray(mu) - r * total) ** 2


def iterate(
    congestion: Congestion, k: int, step_size: float, iterations: int = 10_000
) -> tuple[PathLoad, list[float]]:
    """Run balance steps from an even split; returns the final load and gaps."""
    load = PathLoad.even(k)
    gaps: list[float] = []
    for _ in range(iterations):
        c = congestion(np.asarray(load.rates))
        load = balance_step(load.with_congestion(c.tolist()), step_size)
        assert math.fsum(load.rates) == pytest.approx(1.0, abs=1e-9)
        assert min(load.rates) >= 0.0
        c = congestion(np.asarray(load.rates))
        gaps.append(convergence_gap(load.rates, c.tolist()))
        if gaps[-1] < 1e-6:
            break
    return load, gaps


class TestPathLoad:
    """Test traffic split validation."""

    def test_even_split(self) -> None:
        """Test the even split sums to one."""
        load = PathLoad.even(4)
        assert load.rates == (0.25, 0.25, 0.25, 0.25)
        assert load.k == 4

    def test_rates_must_sum_to_one(self) -> None:
        """Test splits off the simplex are rejected."""
        with pytest.raises(ValidationError, match="sum"):
            PathLoad(rates=(0.5, 0.6), congestion=(0.0, 0.0))

    def test_negative_rate(self) -> None:
        """Test negative rates are rejected."""
        with pytest.raises(ValidationError, match="negative"):
            PathLoad(rates=(1.5, -0.5), congestion=(0.0, 0.0))

    def test_length_mismatch(self) -> None:
        """Test one congestion value per path."""
        with pytest.raises(ValidationError):
            PathLoad(rates=(1.0,), congestion=(0.0, 0.0))


class TestProjection:
    """Test the simplex projection."""

    def test_inside_point_unchanged(self) -> None:
        """Test points on the simplex are fixed."""
        point = np.array([0.2, 0.3, 0.5])
        assert project_simplex(point) == pytest.approx(point)

    def test_clamps_negative_coordinates(self) -> None:
        """Test a coordinate pushed below zero is clamped."""
        assert project_simplex(np.array([-0.45, 1.45])) == pytest.approx([0.0, 1.0])

    def test_uniform_excess_scaled(self) -> None:
        """Test a uniform excess is removed by renormalizing."""
        assert project_simplex(np.array([0.6, 0.6])) == pytest.approx([0.5, 0.5])

    def test_clamp_then_renormalize(self) -> None:
        """Test clamped mass is not redistributed before dividing by the sum."""
        projected = project_simplex(np.array([-0.1, 0.5, 0.6]))
        assert projected == pytest.approx([0.0, 0.5 / 1.1, 0.6 / 1.1])

    def test_nothing_positive(self) -> None:
        """Test a vector with no positive coordinate cannot be projected."""
        with pytest.raises(BalancerUsageError):
            project_simplex(np.array([-1.0, 0.0]))


class TestBalanceStep:
    """Test one gradient-projection step."""

    def test_reference_step(self) -> None:
        """Test k=2, c=(2, 1), γ=0.1 moves (0.5, 0.5) to (0.45, 0.55)."""
        load = PathLoad(rates=(0.5, 0.5), congestion=(2.0, 1.0))
        assert balance_step(load, 0.1).rates == pytest.approx((0.45, 0.55))

    def test_equal_congestion_is_fixed_point(self) -> None:
        """Test equal marginal delays leave the split unchanged."""
        load = PathLoad(rates=(0.2, 0.3, 0.5), congestion=(1.0, 1.0, 1.0))
        assert balance_step(load, 0.5).rates == pytest.approx(load.rates)

    def test_projection_clamps(self) -> None:
        """Test a step past the boundary lands on the simplex edge."""
        load = PathLoad(rates=(0.05, 0.95), congestion=(10.0, 0.0))
        assert balance_step(load, 0.1).rates == pytest.approx((0.0, 1.0))

    def test_step_clamps_and_renormalizes(self) -> None:
        """Test r=(0.2, 0.4, 0.4), c=(5, 1, 0), γ=0.1 clamps path 0."""
        load = PathLoad(rates=(0.2, 0.4, 0.4), congestion=(5.0, 1.0, 0.0))
        rates = balance_step(load, 0.1).rates
        assert rates[0] == 0.0
        assert rates == pytest.approx((0.0, 0.5 / 1.1, 0.6 / 1.1))
        assert rates[1] == pytest.approx(0.4545, abs=1e-4)

    def test_idle_path_stays_idle(self) -> None:
        """Test a zero-rate path above the mean is held and left out of it."""
        load = PathLoad(rates=(0.0, 0.5, 0.5), congestion=(9.0, 1.0, 2.0))
        assert balance_step(load, 0.1).rates == pytest.approx((0.0, 0.55, 0.45))

    def test_idle_path_rejoins(self) -> None:
        """Test a zero-rate path below the mean picks up traffic again."""
        load = PathLoad(rates=(0.0, 0.5, 0.5), congestion=(0.0, 3.0, 3.0))
        assert balance_step(load, 0.1).rates == pytest.approx((0.2, 0.4, 0.4))

    def test_random_steps_stay_on_simplex(self) -> None:
        """Test arbitrary congestion never leaves the simplex."""
        rng = np.random.default_rng(5)
        load = PathLoad.even(6)
        for _ in range(200):
            congestion = rng.uniform(0, 50, size=6).tolist()
            load = balance_step(load.with_congestion(congestion), 0.3)
            assert math.fsum(load.rates) == pytest.approx(1.0, abs=1e-9)
            assert min(load.rates) >= 0.0

    @pytest.mark.parametrize("step_size", [0.0, -0.1, math.inf, math.nan])
    def test_invalid_step_size(self, step_size: float) -> None:
        """Test non-positive or non-finite step sizes."""
        with pytest.raises(BalancerUsageError):
            balance_step(PathLoad.even(2), step_size)

    def test_non_finite_congestion(self) -> None:
        """Test congestion must be finite."""
        load = PathLoad(rates=(0.5, 0.5), congestion=(math.inf, 1.0))
        with pytest.raises(BalancerUsageError):
            balance_step(load, 0.1)


class TestConvergence:
    """Test the balancer equalizes marginal delay on reference models."""

    def test_linear_marginal_delay(self) -> None:
        """Test c = a + b·r reaches r ≈ (0.3214, 0.3929, 0.2857)."""
        congestion = linear_marginal((1.0, 1.5, 2.0), (4.0, 2.0, 1.0))
        load, gaps = iterate(congestion, 3, 0.1)
        assert gaps[-1] < 1e-3
        assert load.rates == pytest.approx((9 / 28, 11 / 28, 8 / 28), abs=1e-3)

    def test_mm1_marginal_delay(self) -> None:
        """Test M/M/1 paths reach r = (1/2, 1/3, 1/6) with c = 0.75."""
        congestion = mm1_marginal((10.0, 8.0, 6.0), 12.0)
        load, gaps = iterate(congestion, 3, 0.02)
        assert gaps[-1] < 1e-3
        assert load.rates == pytest.approx((0.5, 1 / 3, 1 / 6), abs=1e-3)
        final = congestion(np.asarray(load.rates))
        assert final == pytest.approx([0.75] * 3, abs=1e-3)

    def test_quadratic_marginal_delay(self) -> None:
        """Test a path too expensive to use drains to zero rate."""
        congestion = quadratic_marginal((0.5, 0.2, 0.8, 0.1), (1.0, 3.0, 2.0, 4.0))
        load, gaps = iterate(congestion, 4, 0.1)
        assert gaps[-1] < 1e-3
        assert load.rates[2] == 0.0
        assert len(gaps) < 10_000


class TestMonitor:
    """Test marginal delay estimation from probes."""

    def test_linear_delay_slope(self) -> None:
        """Test a linear delay curve yields its slope."""
        samples = [
            [DelaySample(rate=0.2, delay=1.4), DelaySample(rate=0.3, delay=1.6)]
        ]
        assert monitor(samples) == pytest.approx([2.0])

    def test_constant_delay(self) -> None:
        """Test a flat delay curve yields zero."""
        samples = [
            [DelaySample(rate=0.1, delay=3.0), DelaySample(rate=0.4, delay=3.0)]
        ]
        assert monitor(samples) == [0.0]

    def test_keeps_previous_without_distinct_rates(self) -> None:
        """Test a path with one usable sample keeps its previous estimate."""
        samples = [
            [DelaySample(rate=0.5, delay=1.0)],
            [DelaySample(rate=0.5, delay=1.0), DelaySample(rate=0.5, delay=1.2)],
        ]
        assert monitor(samples, previous=[0.7, 0.9]) == [0.7, 0.9]
        assert monitor(samples) == [0.0, 0.0]

    def test_skips_repeated_rates(self) -> None:
        """Test the latest sample pairs with the last distinct-rate sample."""
        series = [
            DelaySample(rate=0.2, delay=1.0),
            DelaySample(rate=0.4, delay=2.0),
            DelaySample(rate=0.4, delay=2.2),
        ]
        assert monitor([series]) == pytest.approx([6.0])

    def test_overloaded_path_capped(self) -> None:
        """Test an infinite estimate becomes the largest finite one."""
        samples = [
            [DelaySample(rate=0.1, delay=1.0), DelaySample(rate=0.2, delay=1.5)],
            [
                DelaySample(rate=0.1, delay=1.0),
                DelaySample(rate=0.2, delay=math.inf),
            ],
        ]
        assert monitor(samples) == pytest.approx([5.0, 5.0])

    def test_noisy_quadratic(self) -> None:
        """Test noisy d(r) = r² probes land within 20% of the derivative."""
        rng = np.random.default_rng(11)
        low, high = 0.4, 0.5
        samples = [
            [
                DelaySample(rate=low, delay=low**2 + rng.uniform(-1e-3, 1e-3)),
                DelaySample(rate=high, delay=high**2 + rng.uniform(-1e-3, 1e-3)),
            ]
        ]
        estimate = monitor(samples)[0]
        assert estimate == pytest.approx(2 * (low + high) / 2, rel=0.2)

    def test_previous_length_mismatch(self) -> None:
        """Test previous estimates must match the path count."""
        with pytest.raises(BalancerUsageError):
            monitor([[]], previous=[0.0, 0.0])


class TestConvergenceGap:
    """Test the congestion spread metric."""

    def test_ignores_idle_paths(self) -> None:
        """Test paths without traffic do not count."""
        assert convergence_gap([0.5, 0.5, 0.0], [1.0, 1.5, 9.0]) == 0.5

    def test_empty(self) -> None:
        """Test an empty split has no gap."""
        assert convergence_gap([], []) == 0.0

    def test_length_mismatch(self) -> None:
        """Test rates and congestion must align."""
        with pytest.raises(BalancerUsageError):
            convergence_gap([1.0], [])
