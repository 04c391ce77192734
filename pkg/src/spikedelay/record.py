"""Rolling-window temporal storage with continuous-time access.

A :class:`RecordTensor` keeps the last ``W`` observations of a fixed-shape
tensor in a ring buffer. Observations are addressed by *age*: the most recent
observation has age 0, the one before it age ``dt`` and so on. Ages that fall
between two stored samples are resolved with an interpolation strategy.

Interpolation functions share the signature
``f(newer, older, offset, dt) -> values`` where ``newer`` is the sample at age
``floor(d / dt) * dt``, ``older`` the sample one step further back and
``offset`` the distance (ms) from the newer sample back to the queried age.
Extrapolation functions (used by :meth:`RecordTensor.insert`) take
``(value, newer, older, offset, dt)`` and return the replacement pair
``(newer, older)``.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "RecordTensor",
    "bracket",
    "window_size",
    "interp_previous",
    "interp_nearest",
    "interp_linear",
    "interp_expdecay",
    "interp_expratedecay",
    "extrap_previous",
    "extrap_nearest",
    "extrap_linear",
    "extrap_expdecay",
]

# Tolerance (in units of steps) for snapping a time to the sample grid.
GRID_TOLERANCE = 1e-5

Interpolation = Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray]
Extrapolation = Callable[
    [np.ndarray, np.ndarray, np.ndarray, np.ndarray, float],
    tuple[np.ndarray, np.ndarray],
]


def _snap(steps: float) -> float:
    r = round(steps)
    return float(r) if abs(steps - r) <= GRID_TOLERANCE else steps


def window_size(dt: float, duration: float, inclusive: bool = True) -> int:
    """Number of slices needed for a window of ``duration`` ms."""
    if not dt > 0:
        raise ValueError(f"step length must be positive, got {dt}")
    if not duration >= 0:
        raise ValueError(f"duration must be nonnegative, got {duration}")
    n = math.floor(_snap(duration / dt))
    return n + 1 if inclusive else max(n, 1)


def bracket(
    times: np.ndarray, dt: float, max_steps: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Locate the two grid samples that bracket each time.

    Returns ``(k0, k1, offset, exact)``: the newer and older sample ages in
    steps, the distance from the newer sample in ms, and a mask of times that
    lie on the grid (for which ``k0 == k1``).

    Raises:
        ValueError: if any time is negative or older than ``max_steps`` steps.
    """
    times = np.asarray(times, dtype=np.float64)
    steps = times / dt
    nearest = np.rint(steps)
    exact = np.abs(steps - nearest) <= GRID_TOLERANCE
    steps = np.where(exact, nearest, steps)
    if np.any(np.isnan(steps)) or np.any(steps < 0) or np.any(steps > max_steps):
        raise ValueError(
            f"times must lie within [0, {max_steps * dt}] ms, got range "
            f"[{np.nanmin(times) if times.size else 0}, "
            f"{np.nanmax(times) if times.size else 0}]"
        )
    k0 = np.floor(steps).astype(np.intp)
    k1 = np.ceil(steps).astype(np.intp)
    offset = (steps - k0) * dt
    return k0, k1, offset, exact


def interp_previous(newer, older, offset, dt):
    """Value of the older sample, the observation that had already occurred."""
    return older


def interp_nearest(newer, older, offset, dt):
    """Value of the nearer sample, ties resolve to the older one."""
    return np.where(offset < dt / 2, newer, older)


def interp_linear(newer, older, offset, dt):
    """Linear interpolation between the bracketing samples."""
    frac = (offset / dt).astype(np.float32)
    return (1 - frac) * newer + frac * older


def interp_expdecay(newer, older, offset, dt, *, time_constant: float):
    """Older sample decayed exponentially up to the queried time."""
    if not time_constant > 0:
        raise ValueError(f"time constant must be positive, got {time_constant}")
    return older * np.exp(-(dt - offset) / time_constant).astype(np.float32)


def interp_expratedecay(newer, older, offset, dt, *, rate_constant: float):
    """Older sample decayed exponentially, parameterized by a rate (1/ms)."""
    if not rate_constant > 0:
        raise ValueError(f"rate constant must be positive, got {rate_constant}")
    return older * np.exp(-rate_constant * (dt - offset)).astype(np.float32)


def extrap_previous(value, newer, older, offset, dt):
    return newer, np.broadcast_to(value, older.shape)


def extrap_nearest(value, newer, older, offset, dt):
    near = offset < dt / 2
    return np.where(near, value, newer), np.where(near, older, value)


def extrap_linear(value, newer, older, offset, dt):
    value = np.broadcast_to(value, newer.shape)
    return value, value


def extrap_expdecay(value, newer, older, offset, dt, *, time_constant: float):
    """Write the older sample so an exponential-decay select returns ``value``."""
    if not time_constant > 0:
        raise ValueError(f"time constant must be positive, got {time_constant}")
    grown = value * np.exp((dt - offset) / time_constant).astype(np.float32)
    return newer, grown


class RecordTensor:
    """Ring buffer of timestamped observations with continuous-time access.

    Args:
        shape: shape of a single observation.
        dt: time between observations (ms).
        duration: length of the window (ms).
        inclusive: whether the observation exactly ``duration`` ms old is kept.
    """

    def __init__(
        self,
        shape: Sequence[int],
        dt: float,
        duration: float,
        inclusive: bool = True,
    ):
        shape = (int(shape),) if np.ndim(shape) == 0 else tuple(int(s) for s in shape)
        if not shape or any(s < 1 for s in shape):
            raise ValueError(f"observation shape must be nonempty and positive, got {shape}")
        self.dt = float(dt)
        self.duration = float(duration)
        self.inclusive = bool(inclusive)
        size = window_size(self.dt, self.duration, self.inclusive)
        self.data = np.zeros((size, *shape), dtype=np.float32)
        self.pointer = 0
        self.observed = 0

    @classmethod
    def create(cls, shape, dt, duration, inclusive=True) -> "RecordTensor":
        return cls(shape, dt, duration, inclusive)

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of one observation."""
        return self.data.shape[1:]

    @property
    def size(self) -> int:
        """Number of stored slices ``W``."""
        return self.data.shape[0]

    @property
    def max_age(self) -> float:
        """Age (ms) of the oldest stored slice."""
        return (self.size - 1) * self.dt

    def reset(self) -> None:
        self.data.fill(0)
        self.pointer = 0
        self.observed = 0

    def _index(self, age_steps):
        return (self.pointer - 1 - age_steps) % self.size

    def push(self, obs) -> None:
        """Store ``obs`` as the newest observation."""
        obs = np.asarray(obs)
        if obs.shape != self.shape:
            raise ValueError(f"expected observation of shape {self.shape}, got {obs.shape}")
        self.data[self.pointer] = obs
        self.pointer = (self.pointer + 1) % self.size
        self.observed = min(self.observed + 1, self.size)

    def peek(self) -> np.ndarray:
        """Most recent observation."""
        return self.data[self._index(0)]

    def aligned(self) -> np.ndarray:
        """All slices ordered by age, newest first, shape ``W x shape``."""
        return np.take(self.data, self._index(np.arange(self.size)), axis=0)

    def _gather(self, idx: np.ndarray) -> np.ndarray:
        # idx has one extra trailing axis relative to the observation shape
        data = self.data[..., None]
        return np.take_along_axis(data, idx[None], axis=0)[0]

    def _prepare(self, times) -> tuple[np.ndarray, bool]:
        times = np.asarray(times, dtype=np.float64)
        ndim = len(self.shape)
        if times.ndim == ndim:
            return times[..., None], True
        if times.ndim == ndim + 1:
            return times, False
        if times.ndim == 0:
            return np.broadcast_to(times, (1,) * ndim + (1,)), True
        raise ValueError(
            f"times must have {ndim} or {ndim + 1} dimensions for observations "
            f"of shape {self.shape}, got {times.shape}"
        )

    def select(self, delays, interp: Interpolation = interp_previous) -> np.ndarray:
        """Observations ``delays`` ms before the present.

        ``delays`` has the observation shape (broadcastable) with an optional
        trailing axis of ``D`` simultaneous queries per element; the result has
        the broadcast shape, including the trailing axis if one was given.
        Times on the sample grid return stored values unchanged.
        """
        if self.observed == 0:
            raise RuntimeError("cannot select from a record with no observations")
        times, squeeze = self._prepare(delays)
        k0, k1, offset, exact = bracket(times, self.dt, self.size - 1)
        newer = self._gather(self._index(k0))
        older = self._gather(self._index(k1))
        if np.all(exact):
            out = newer
        else:
            out = np.where(exact, newer, interp(newer, older, offset, self.dt))
            out = out.astype(np.float32, copy=False)
        return out[..., 0] if squeeze else out

    def insert(self, time, value, extrap: Extrapolation = extrap_previous) -> None:
        """Overwrite the observation(s) ``time`` ms before the present.

        Times on the grid overwrite a single slice; otherwise the bracketing
        slices are rewritten by ``extrap`` so that the matching interpolation
        returns ``value`` at ``time``.
        """
        value = np.asarray(value, dtype=np.float32)
        if value.shape != self.shape:
            raise ValueError(f"expected value of shape {self.shape}, got {value.shape}")
        time = np.broadcast_to(np.asarray(time, dtype=np.float64), self.shape)
        k0, k1, offset, exact = bracket(time[..., None], self.dt, self.size - 1)
        i0, i1 = self._index(k0), self._index(k1)
        newer, older = self._gather(i0), self._gather(i1)
        v = value[..., None]
        new_newer, new_older = extrap(v, newer, older, offset, self.dt)
        new_newer = np.where(exact, v, new_newer).astype(np.float32)
        new_older = np.where(exact, v, new_older).astype(np.float32)
        data = self.data[..., None]
        np.put_along_axis(data, i1[None], new_older[None], axis=0)
        np.put_along_axis(data, i0[None], new_newer[None], axis=0)
