"""Homogeneous Poisson spike trains from firing rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PoissonEncoderConfig", "poisson_encode"]

VARIANTS = ("exponential_interval", "poisson_interval")


@dataclass(frozen=True)
class PoissonEncoderConfig:
    rates: np.ndarray
    steps: int
    dt: float = 1.0
    seed: int = 0
    variant: str = "exponential_interval"


def _spike_steps(intervals: np.ndarray, horizon: int) -> np.ndarray:
    """Spike steps per source (last axis) from sampled step-valued intervals.

    Spikes landing on an occupied step move to the next free step, so at most
    one spike occurs per step and none are lost inside the horizon.
    Returns an integer array with ``horizon`` marking absent spikes.
    """
    # clip before the cast so very long intervals cannot wrap around int64
    times = np.minimum(np.cumsum(intervals, axis=0), horizon)
    steps = np.floor(times).astype(np.int64)
    # d_k = max(s_k, d_{k-1} + 1)  <=>  d_k - k = running max of (s_k - k)
    k = np.arange(steps.shape[0], dtype=np.int64)[:, None]
    steps = np.maximum.accumulate(steps - k, axis=0) + k
    return np.minimum(steps, horizon)


def poisson_encode(
    rates,
    steps: int,
    dt: float = 1.0,
    seed: int = 0,
    variant: str = "exponential_interval",
) -> np.ndarray:
    """Boolean spike trains of shape ``steps x rates.shape``.

    ``exponential_interval`` samples inter-spike intervals from an exponential
    distribution with mean ``1000 / rate`` ms and places each spike in step
    ``floor(t / dt)``. ``poisson_interval`` instead samples whole-step
    intervals from a Poisson distribution with mean ``1000 / (rate * dt)``;
    its trains are markedly more regular. Both use NumPy's PCG64 generator
    seeded with ``seed``.
    """
    rates = np.asarray(rates, dtype=np.float64)
    if not np.all(np.isfinite(rates)) or np.any(rates < 0):
        raise ValueError("rates must be finite and nonnegative")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    if not dt > 0:
        raise ValueError(f"step length must be positive, got {dt}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")

    flat = rates.reshape(-1)
    out = np.zeros((steps, flat.size), dtype=bool)
    rng = np.random.default_rng(seed)
    active = np.flatnonzero(flat > 0)
    if steps == 0 or active.size == 0:
        return out.reshape(steps, *rates.shape)

    # mean interval in steps, capped where the sampler would overflow
    mean = np.minimum(1000.0 / (flat[active] * dt), 1e15)
    expected = steps / mean
    count = int(np.ceil(expected.max() + 6 * np.sqrt(expected.max()) + 10))
    while True:
        if variant == "exponential_interval":
            intervals = rng.exponential(mean, size=(count, active.size))
        else:
            intervals = rng.poisson(mean, size=(count, active.size)).astype(np.float64)
        spikes = _spike_steps(intervals, steps)
        if np.all(spikes[-1] >= steps):
            break
        count *= 2

    rows, cols = np.nonzero(spikes < steps)
    out[spikes[rows, cols], active[cols]] = True
    return out.reshape(steps, *rates.shape)


def encode(cfg: PoissonEncoderConfig) -> np.ndarray:
    return poisson_encode(cfg.rates, cfg.steps, cfg.dt, cfg.seed, cfg.variant)
