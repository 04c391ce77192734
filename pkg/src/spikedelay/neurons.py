"""Stateful groups of leaky integrate-and-fire neurons.

Each group takes one tensor of input currents per step (``B x shape``) and
returns a boolean tensor of spikes of the same shape.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .functional import (
    AdaptiveThresholdParams,
    ConstantReset,
    LinearMembraneParams,
    LinearReset,
    ResetRule,
    adaptive_thresholds_linear_spike,
    apply_adaptive_thresholds,
    voltage_integration_linear,
    voltage_thresholding,
)

__all__ = ["NeuronGroup", "LIF", "ALIF", "GLIF2"]


def _as_shape(shape) -> tuple[int, ...]:
    shape = (int(shape),) if np.ndim(shape) == 0 else tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ValueError(f"invalid neuron shape {shape}")
    return shape


class NeuronGroup:
    """Neurons sharing linear membrane dynamics, a reset rule and thresholds.

    Refractory neurons hold their post-spike voltage and ignore input for
    ``ceil(t_refrac / dt)`` steps. Adaptive threshold components decay before
    the threshold is evaluated and are incremented by the spikes of the step.
    """

    model = "generic"

    def __init__(
        self,
        shape,
        dt: float,
        *,
        membrane: LinearMembraneParams,
        theta_base: float,
        reset: ResetRule,
        adaptation: Sequence[AdaptiveThresholdParams] = (),
        t_refrac: float = 0.0,
        batch_size: int = 1,
    ):
        if not dt > 0:
            raise ValueError(f"step length must be positive, got {dt}")
        if t_refrac < 0:
            raise ValueError(f"refractory period must be nonnegative, got {t_refrac}")
        if batch_size < 1:
            raise ValueError(f"batch size must be positive, got {batch_size}")
        self.shape = _as_shape(shape)
        self.dt = float(dt)
        self.batch_size = int(batch_size)
        self.membrane = membrane
        self.theta_base = float(theta_base)
        self.reset_rule = reset
        self.adaptation = tuple(adaptation)
        self.t_refrac = float(t_refrac)
        self.reset()

    @property
    def batched_shape(self) -> tuple[int, ...]:
        return (self.batch_size, *self.shape)

    @property
    def threshold(self) -> np.ndarray:
        """Threshold currently in effect (before this step's decay)."""
        return apply_adaptive_thresholds(self.theta_base, list(self.theta_adapt))

    def reset(self) -> None:
        """Return every neuron to rest with no adaptation or refractoriness."""
        shape = self.batched_shape
        self.v = np.full(shape, self.membrane.v_rest, dtype=np.float32)
        self.theta_adapt = np.zeros((len(self.adaptation), *shape), dtype=np.float32)
        self.refrac_remaining = np.zeros(shape, dtype=np.float32)
        self.spike = np.zeros(shape, dtype=bool)

    def __call__(self, inputs) -> np.ndarray:
        return self.step(inputs)

    def step(self, inputs) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float32)
        if inputs.shape != self.batched_shape:
            raise ValueError(f"expected input of shape {self.batched_shape}, got {inputs.shape}")

        refractory = self.refrac_remaining > 0
        v = voltage_integration_linear(self.v, inputs, self.membrane, self.dt)
        v = np.where(refractory, self.v, v)

        no_spikes = np.zeros_like(self.spike)
        decayed = [
            adaptive_thresholds_linear_spike(theta, no_spikes, p, self.dt)
            for theta, p in zip(self.theta_adapt, self.adaptation)
        ]
        theta = apply_adaptive_thresholds(self.theta_base, decayed) if decayed else self.theta_base

        spikes, v_post = voltage_thresholding(v, theta, self.reset_rule, self.membrane.v_rest)
        spikes &= ~refractory
        self.v = np.where(spikes, v_post, v).astype(np.float32, copy=False)

        for k, (theta_k, p) in enumerate(zip(decayed, self.adaptation)):
            self.theta_adapt[k] = theta_k + np.float32(p.a_theta) * spikes

        # decrement with a small tolerance so t_refrac / dt round-off cannot add a step
        remaining = self.refrac_remaining - np.float32(self.dt)
        remaining = np.where(remaining > 1e-6 * self.dt, remaining, 0)
        self.refrac_remaining = np.where(spikes, np.float32(self.t_refrac), remaining).astype(np.float32)

        self.spike = spikes
        return spikes


class LIF(NeuronGroup):
    """Leaky integrate-and-fire neurons with a fixed threshold and reset."""

    model = "LIF"

    def __init__(
        self,
        shape,
        dt: float,
        *,
        v_rest: float = -60.0,
        v_reset: float = -65.0,
        v_threshold: float = -50.0,
        tau_m: float = 20.0,
        r_m: float = 1.0,
        t_refrac: float = 3.0,
        batch_size: int = 1,
    ):
        super().__init__(
            shape,
            dt,
            membrane=LinearMembraneParams(tau_m, v_rest, r_m),
            theta_base=v_threshold,
            reset=ConstantReset(v_reset),
            t_refrac=t_refrac,
            batch_size=batch_size,
        )


class ALIF(NeuronGroup):
    """LIF neurons whose threshold rises with each spike and relaxes back.

    ``tau_theta`` and ``a_theta`` may be sequences to track several
    independent adaptation components.
    """

    model = "ALIF"

    def __init__(
        self,
        shape,
        dt: float,
        *,
        v_rest: float = -60.0,
        v_reset: float = -65.0,
        v_threshold: float = -50.0,
        tau_m: float = 20.0,
        r_m: float = 1.0,
        t_refrac: float = 3.0,
        tau_theta: float | Iterable[float] = 100.0,
        a_theta: float | Iterable[float] = 0.5,
        batch_size: int = 1,
    ):
        super().__init__(
            shape,
            dt,
            membrane=LinearMembraneParams(tau_m, v_rest, r_m),
            theta_base=v_threshold,
            reset=ConstantReset(v_reset),
            adaptation=_adaptation(tau_theta, a_theta),
            t_refrac=t_refrac,
            batch_size=batch_size,
        )


class GLIF2(NeuronGroup):
    """Adaptive-threshold neurons with a voltage-dependent linear reset."""

    model = "GLIF2"

    def __init__(
        self,
        shape,
        dt: float,
        *,
        v_rest: float = -60.0,
        v_threshold: float = -50.0,
        reset_slope: float = 0.0,
        reset_offset: float = -5.0,
        tau_m: float = 20.0,
        r_m: float = 1.0,
        t_refrac: float = 3.0,
        tau_theta: float | Iterable[float] = 100.0,
        a_theta: float | Iterable[float] = 0.5,
        batch_size: int = 1,
    ):
        super().__init__(
            shape,
            dt,
            membrane=LinearMembraneParams(tau_m, v_rest, r_m),
            theta_base=v_threshold,
            reset=LinearReset(reset_slope, reset_offset),
            adaptation=_adaptation(tau_theta, a_theta),
            t_refrac=t_refrac,
            batch_size=batch_size,
        )


def _adaptation(tau_theta, a_theta) -> tuple[AdaptiveThresholdParams, ...]:
    taus = np.atleast_1d(np.asarray(tau_theta, dtype=float))
    amps = np.atleast_1d(np.asarray(a_theta, dtype=float))
    taus, amps = np.broadcast_arrays(taus, amps)
    return tuple(AdaptiveThresholdParams(float(t), float(a)) for t, a in zip(taus, amps))
