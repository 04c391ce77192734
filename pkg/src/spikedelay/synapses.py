"""Delta synapses with a rolling spike history for delayed access."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .record import GRID_TOLERANCE, Interpolation, RecordTensor, interp_previous

__all__ = ["DeltaSynapse", "DeltaPlusSynapse", "SynapseBlueprint"]


@dataclass(frozen=True)
class SynapseBlueprint:
    """Synapse hyperparameters captured ahead of the owning connection.

    Calling the blueprint with ``(shape, dt, t_max, batch_size)`` builds a
    fresh synapse.
    """

    cls: type
    q_spike: Optional[float] = None
    allow_injection: bool = False

    def __call__(self, shape, dt: float, t_max: float, batch_size: int = 1) -> "DeltaSynapse":
        return self.cls(
            shape,
            dt,
            t_max,
            batch_size=batch_size,
            q_spike=self.q_spike,
            allow_injection=self.allow_injection,
        )


class DeltaSynapse:
    """Instantaneous synapse: each spike delivers a charge of ``q_spike`` pC
    within its step, i.e. a current of ``q_spike / dt`` nA.

    Only spikes are recorded; delayed currents are derived from delayed spikes.
    ``q_spike`` defaults to ``dt`` so one spike gives unit current.
    """

    def __init__(
        self,
        shape,
        dt: float,
        t_max: float = 0.0,
        *,
        batch_size: int = 1,
        q_spike: Optional[float] = None,
        allow_injection: bool = False,
    ):
        if not dt > 0:
            raise ValueError(f"step length must be positive, got {dt}")
        if t_max < 0:
            raise ValueError(f"maximum delay must be nonnegative, got {t_max}")
        if batch_size < 1:
            raise ValueError(f"batch size must be positive, got {batch_size}")
        if q_spike is not None and q_spike < 0:
            raise ValueError(f"charge per spike must be nonnegative, got {q_spike}")
        shape = (int(shape),) if np.ndim(shape) == 0 else tuple(int(s) for s in shape)
        self.shape = shape
        self.dt = float(dt)
        self.t_max = float(t_max)
        self.batch_size = int(batch_size)
        self.q_spike = self.dt if q_spike is None else float(q_spike)
        self.allow_injection = bool(allow_injection)

        # ceil(1 + t_max / dt) slices so every delay in [0, t_max] is bracketed
        steps = t_max / dt
        steps = round(steps) if abs(steps - round(steps)) <= GRID_TOLERANCE else math.ceil(steps)
        self.spike_record = RecordTensor((self.batch_size, *shape), dt, steps * dt, inclusive=True)
        self._injected = None

    @classmethod
    def partialconstructor(cls, q_spike: Optional[float] = None, allow_injection: bool = False):
        if q_spike is not None and q_spike < 0:
            raise ValueError(f"charge per spike must be nonnegative, got {q_spike}")
        return SynapseBlueprint(cls, q_spike, allow_injection)

    @property
    def batched_shape(self) -> tuple[int, ...]:
        return (self.batch_size, *self.shape)

    @property
    def scale(self) -> np.float32:
        """Current (nA) delivered by one spike."""
        return np.float32(self.q_spike / self.dt)

    @property
    def spike(self) -> np.ndarray:
        """Most recent input spikes."""
        return self.spike_record.peek().astype(bool)

    @property
    def injected(self) -> Optional[np.ndarray]:
        """Current injected on the most recent step, if any."""
        return self._injected

    @property
    def current(self) -> np.ndarray:
        current = self.scale * self.spike_record.peek()
        return current if self._injected is None else current + self._injected

    def reset(self) -> None:
        self.spike_record.reset()
        self._injected = None

    def __call__(self, spikes, *injected) -> np.ndarray:
        return self.step(spikes, *injected)

    def step(self, spikes, *injected) -> np.ndarray:
        spikes = np.asarray(spikes)
        if spikes.shape != self.batched_shape:
            raise ValueError(f"expected spikes of shape {self.batched_shape}, got {spikes.shape}")
        if injected and not self.allow_injection:
            raise ValueError(f"{type(self).__name__} does not accept injected current")
        self.spike_record.push(spikes.astype(bool))
        if injected:
            total = np.zeros(self.batched_shape, dtype=np.float32)
            for inj in injected:
                total = total + np.broadcast_to(np.asarray(inj, dtype=np.float32), self.batched_shape)
            self._injected = total
        else:
            self._injected = None
        return self.current

    def _check_delays(self, delays) -> np.ndarray:
        delays = np.asarray(delays, dtype=np.float64)
        if np.any(delays < 0) or np.any(delays > self.t_max + GRID_TOLERANCE * self.dt):
            raise ValueError(f"delays must lie within [0, {self.t_max}] ms")
        return delays

    def select_spikes(self, delays, interp: Interpolation = interp_previous) -> np.ndarray:
        """Delayed spikes as 0/1 floats with the broadcast shape of ``delays``."""
        return self.spike_record.select(self._check_delays(delays), interp)

    def history(self, delays) -> tuple[np.ndarray, np.ndarray]:
        """Delayed spikes (boolean) and the currents they deliver.

        Injected current is not recorded and does not appear here.
        """
        spikes = self.select_spikes(delays)
        return spikes.astype(bool), self.scale * spikes


class DeltaPlusSynapse(DeltaSynapse):
    """Delta synapse that also accepts injected currents."""

    def __init__(self, shape, dt, t_max=0.0, *, batch_size=1, q_spike=None, allow_injection=True):
        super().__init__(
            shape, dt, t_max, batch_size=batch_size, q_spike=q_spike, allow_injection=allow_injection
        )

    @classmethod
    def partialconstructor(cls, q_spike: Optional[float] = None, allow_injection: bool = True):
        return super().partialconstructor(q_spike, allow_injection)
