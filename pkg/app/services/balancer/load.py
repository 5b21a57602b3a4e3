"""
Load balancing across the working paths.

Two phases per control interval: `monitor` turns (rate, delay) probes into
per-path marginal delay estimates, `balance_step` moves traffic away from
paths whose marginal delay is above the mean and projects the split back
onto the probability simplex.
"""

from collections.abc import Sequence
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import BalancerUsageError

SIMPLEX_TOLERANCE = 1e-9
POSITIVE_RATE = 1e-12


class PathLoad(BaseModel):
    """Traffic split over k paths plus the latest congestion estimate per path."""

    model_config = ConfigDict(frozen=True)

    rates: tuple[float, ...] = Field(min_length=1)
    congestion: tuple[float, ...]

    @model_validator(mode="after")
    def _check_simplex(self) -> "PathLoad":
        if len(self.rates) != len(self.congestion):
            raise BalancerUsageError(
                f"{len(self.rates)} rates but {len(self.congestion)} congestion values"
            )
        if any(rate < 0 for rate in self.rates):
            raise BalancerUsageError(f"negative rate in {self.rates}")
        total = math.fsum(self.rates)
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise BalancerUsageError(f"rates sum to {total}, expected 1")
        return self

    @classmethod
    def even(cls, k: int) -> "PathLoad":
        """Equal split with zero congestion."""
        if k < 1:
            raise BalancerUsageError(f"k={k} must be >= 1")
        return cls(rates=(1.0 / k,) * k, congestion=(0.0,) * k)

    @property
    def k(self) -> int:
        return len(self.rates)

    def with_congestion(self, congestion: Sequence[float]) -> "PathLoad":
        return PathLoad(rates=self.rates, congestion=tuple(congestion))


class DelaySample(BaseModel):
    """One-way delay observed on a path while it carried a given rate."""

    model_config = ConfigDict(frozen=True)

    rate: float
    delay: float


def project_simplex(values: np.ndarray) -> np.ndarray:
    """
    Map a split back onto {x : x ≥ 0, Σx = 1}: clamp negatives to 0, renormalize.

    Points already on the simplex come back unchanged.
    """
    v = np.asarray(values, dtype=np.float64)
    clamped = np.maximum(v, 0.0)
    total = clamped.sum()
    if not total > 0:
        raise BalancerUsageError(f"no positive rate left in {v.tolist()}")
    return clamped / total


def _idle_paths(rates: np.ndarray, congestion: np.ndarray) -> np.ndarray:
    """Paths at zero rate whose congestion is above the mean of the others."""
    idle = np.zeros(rates.size, dtype=bool)
    while True:
        mean = congestion[~idle].mean()
        grown = idle | ((rates <= 0.0) & (congestion > mean))
        if np.array_equal(grown, idle):
            return idle
        idle = grown


def balance_step(load: PathLoad, step_size: float) -> PathLoad:
    """
    One gradient-projection step.

    r_i ← r_i − γ·(c_i − mean(c)), then `project_simplex`. A path already at
    zero rate whose congestion is above the mean stays at zero and is left out
    of the mean. The congestion estimates are carried over unchanged.
    """
    if not step_size > 0 or not math.isfinite(step_size):
        raise BalancerUsageError(f"step_size={step_size} must be positive")
    rates = np.asarray(load.rates, dtype=np.float64)
    congestion = np.asarray(load.congestion, dtype=np.float64)
    if not np.all(np.isfinite(congestion)):
        raise BalancerUsageError(f"non-finite congestion in {load.congestion}")
    idle = _idle_paths(rates, congestion)
    moved = rates - step_size * (congestion - congestion[~idle].mean())
    moved[idle] = 0.0
    projected = project_simplex(moved)
    return PathLoad(
        rates=tuple(float(r) for r in projected), congestion=load.congestion
    )


def _finite_difference(samples: Sequence[DelaySample]) -> float | None:
    if len(samples) < 2:
        return None
    latest = samples[-1]
    for earlier in reversed(samples[:-1]):
        if earlier.rate != latest.rate:
            return (latest.delay - earlier.delay) / (latest.rate - earlier.rate)
    return None


def monitor(
    samples: Sequence[Sequence[DelaySample]],
    previous: Sequence[float] | None = None,
) -> list[float]:
    """
    Per-path d(delay)/d(rate) from the two most recent distinct-rate samples.

    A path without two usable samples keeps its previous estimate (0.0 when
    there is none). Non-finite estimates, e.g. from an overloaded path, are
    replaced by the largest finite estimate of the round.
    """
    if previous is not None and len(previous) != len(samples):
        raise BalancerUsageError(
            f"{len(samples)} sample series but {len(previous)} previous estimates"
        )
    raw = [_finite_difference(series) for series in samples]

    estimates: list[float] = []
    for index, value in enumerate(raw):
        if value is None:
            estimates.append(previous[index] if previous is not None else 0.0)
        else:
            estimates.append(value)

    finite = [value for value in estimates if math.isfinite(value)]
    ceiling = max(finite) if finite else 0.0
    return [value if math.isfinite(value) else ceiling for value in estimates]


def convergence_gap(rates: Sequence[float], congestion: Sequence[float]) -> float:
    """Spread of congestion over the paths carrying traffic (r_i > 0)."""
    if len(rates) != len(congestion):
        raise BalancerUsageError("rates and congestion differ in length")
    if not congestion:
        return 0.0
    active = [c for r, c in zip(rates, congestion, strict=True) if r > POSITIVE_RATE]
    if not active:
        return 0.0
    return max(active) - min(active)
