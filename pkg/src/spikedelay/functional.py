"""Element-wise neuronal dynamics used to assemble neuron models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "LinearMembraneParams",
    "AdaptiveThresholdParams",
    "ConstantReset",
    "LinearReset",
    "ResetRule",
    "voltage_integration_linear",
    "voltage_thresholding",
    "voltage_thresholding_constant",
    "voltage_thresholding_linear",
    "adaptive_thresholds_linear_spike",
    "apply_adaptive_thresholds",
]


@dataclass(frozen=True)
class LinearMembraneParams:
    tau_m: float = 20.0
    v_rest: float = -60.0
    r_m: float = 1.0

    def __post_init__(self):
        if not self.tau_m > 0:
            raise ValueError(f"tau_m must be positive, got {self.tau_m}")
        if not self.r_m > 0:
            raise ValueError(f"r_m must be positive, got {self.r_m}")


@dataclass(frozen=True)
class AdaptiveThresholdParams:
    tau_theta: float
    a_theta: float

    def __post_init__(self):
        if not self.tau_theta > 0:
            raise ValueError(f"tau_theta must be positive, got {self.tau_theta}")


@dataclass(frozen=True)
class ConstantReset:
    v_reset: float


@dataclass(frozen=True)
class LinearReset:
    """Reset to ``v_rest + slope * (v - v_rest) + offset``."""

    slope: float
    offset: float


ResetRule = Union[ConstantReset, LinearReset]


def voltage_integration_linear(
    v: np.ndarray, i: np.ndarray, p: LinearMembraneParams, dt: float
) -> np.ndarray:
    """Exact step of the leaky membrane with input current held over the step.

    Units are mV, nA, MOhm and ms.
    """
    if not dt > 0:
        raise ValueError(f"step length must be positive, got {dt}")
    v_inf = p.v_rest + p.r_m * np.asarray(i, dtype=np.float32)
    decay = np.float32(np.exp(-dt / p.tau_m))
    return (v_inf + (v - v_inf) * decay).astype(np.float32, copy=False)


def voltage_thresholding_constant(v, theta, v_reset: float):
    spikes = v >= theta
    return spikes, np.where(spikes, np.float32(v_reset), v).astype(np.float32, copy=False)


def voltage_thresholding_linear(v, theta, v_rest: float, slope: float, offset: float):
    spikes = v >= theta
    reset = v_rest + slope * (v - v_rest) + offset
    return spikes, np.where(spikes, reset, v).astype(np.float32, copy=False)


def voltage_thresholding(v, theta, reset: ResetRule, v_rest: float):
    """Detect threshold crossings and apply the reset rule.

    Returns:
        ``(spikes, v)`` where ``spikes`` is boolean and ``v`` has spiking
        elements replaced by their reset voltage.
    """
    if isinstance(reset, ConstantReset):
        return voltage_thresholding_constant(v, theta, reset.v_reset)
    if isinstance(reset, LinearReset):
        return voltage_thresholding_linear(v, theta, v_rest, reset.slope, reset.offset)
    raise TypeError(f"unknown reset rule {reset!r}")


def adaptive_thresholds_linear_spike(
    theta_adapt: np.ndarray,
    spikes: np.ndarray,
    p: AdaptiveThresholdParams,
    dt: float,
) -> np.ndarray:
    decay = np.float32(np.exp(-dt / p.tau_theta))
    return (theta_adapt * decay + np.float32(p.a_theta) * spikes).astype(np.float32, copy=False)


def apply_adaptive_thresholds(
    theta_base: float, theta_adapt: Union[np.ndarray, Sequence[np.ndarray]]
) -> np.ndarray:
    """Effective threshold: base plus every adaptive component."""
    if isinstance(theta_adapt, (list, tuple)):
        total = sum(theta_adapt[1:], start=theta_adapt[0]) if theta_adapt else 0.0
    else:
        total = theta_adapt
    return (np.float32(theta_base) + total).astype(np.float32, copy=False)
