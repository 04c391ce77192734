"""Monitors, reducers and local learning rules.

Learning rules here are written against ``presyn_receptive`` and
``postsyn_receptive`` only, so they apply to every connection type.

Typical loop::

    trainer = STDP(StdpConfig())
    trainer.register_cell("ff", layer.cell)
    for x in inputs:
        layer(x)
        trainer()          # fold monitors, stage updates
        layer.update()     # apply staged updates
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable, Optional

import numpy as np

from .connections import receptive_product
from .record import RecordTensor, interp_expdecay

__all__ = [
    "trace_step",
    "event_step",
    "CumulativeTraceReducer",
    "EventReducer",
    "Monitor",
    "MonitorPool",
    "CellTrainer",
    "StdpConfig",
    "DelayStdpConfig",
    "STDP",
    "DelayAdjustedSTDPD",
]


def trace_step(trace, obs, dt: float, tau: float, amplitude: float = 1.0, target: Any = True):
    """Decay ``trace`` by one step, then add ``amplitude`` where ``obs == target``."""
    decay = np.float32(np.exp(-dt / tau))
    hits = np.asarray(obs) == target
    return (trace * decay + np.float32(amplitude) * hits).astype(np.float32, copy=False)


def event_step(elapsed, obs, dt: float):
    """Time since the last event: zero where ``obs`` is set, else one step more."""
    return np.where(np.asarray(obs, dtype=bool), np.float32(0), elapsed + np.float32(dt)).astype(
        np.float32, copy=False
    )


class _RecordedReducer:
    """Reducer state kept in a record so past values can be selected."""

    def __init__(self, dt: float, duration: float):
        if not dt > 0:
            raise ValueError(f"step length must be positive, got {dt}")
        self.dt = float(dt)
        self.duration = float(duration)
        self.record: Optional[RecordTensor] = None

    @property
    def signature(self) -> tuple:
        raise NotImplementedError

    def initial(self, shape) -> np.ndarray:
        raise NotImplementedError

    def fold(self, obs) -> np.ndarray:
        obs = np.asarray(obs)
        if self.record is None:
            self.record = RecordTensor(obs.shape, self.dt, self.duration)
            self.record.data[:] = self.initial(obs.shape)
        elif obs.shape != self.record.shape:
            raise ValueError(f"expected observation of shape {self.record.shape}, got {obs.shape}")
        value = self._next(self.record.peek(), obs)
        self.record.push(value)
        return value

    def _next(self, state, obs):
        raise NotImplementedError

    def peek(self) -> Optional[np.ndarray]:
        return None if self.record is None else self.record.peek()

    def view(self, delays, interp) -> np.ndarray:
        if self.record is None:
            raise RuntimeError("no observations have been folded")
        return self.record.select(delays, interp)

    def clear(self) -> None:
        self.record = None


class CumulativeTraceReducer(_RecordedReducer):
    """Exponentially decaying trace incremented by ``amplitude`` per event."""

    def __init__(self, dt: float, tau: float, amplitude: float = 1.0, target: Any = True, duration: float = 0.0):
        if not tau > 0:
            raise ValueError(f"time constant must be positive, got {tau}")
        super().__init__(dt, duration)
        self.tau = float(tau)
        self.amplitude = float(amplitude)
        self.target = target

    @property
    def signature(self) -> tuple:
        return ("trace", self.dt, self.tau, self.amplitude, self.target, self.duration)

    def initial(self, shape):
        return np.zeros(shape, dtype=np.float32)

    def _next(self, state, obs):
        return trace_step(state, obs, self.dt, self.tau, self.amplitude, self.target)

    def view(self, delays, interp=None):
        return super().view(delays, interp or _trace_interp(self.tau))


_INITIAL = {"nan": np.nan, "inf": np.inf, "zero": 0.0}


class EventReducer(_RecordedReducer):
    """Elapsed time (ms) since the most recent event.

    Before any event the value is ``initial``: ``"nan"``, ``"inf"`` or ``"zero"``.
    """

    def __init__(self, dt: float, initial: str = "nan", duration: float = 0.0):
        if initial not in _INITIAL:
            raise ValueError(f"initial must be one of {sorted(_INITIAL)}, got {initial!r}")
        super().__init__(dt, duration)
        self.initial_kind = initial

    @property
    def signature(self) -> tuple:
        return ("event", self.dt, self.initial_kind, self.duration)

    def initial(self, shape):
        return np.full(shape, _INITIAL[self.initial_kind], dtype=np.float32)

    def _next(self, state, obs):
        return event_step(state, obs, self.dt)


class Monitor:
    """Folds a source stream through a reducer once per step.

    ``source`` is a zero-argument callable; another monitor's ``peek`` works,
    so monitors can be chained.
    """

    def __init__(self, source: Callable[[], np.ndarray], reducer: _RecordedReducer, target: Any = None):
        self.source = source
        self.reducer = reducer
        self.target = target

    def __call__(self) -> np.ndarray:
        return self.reducer.fold(self.source())

    def peek(self) -> Optional[np.ndarray]:
        return self.reducer.peek()

    def view(self, delays, interp=None):
        return self.reducer.view(delays, interp)

    def clear(self) -> None:
        self.reducer.clear()


class MonitorPool:
    """Shares monitors keyed by (component, attribute, reducer signature)."""

    def __init__(self):
        self._monitors: dict[Hashable, Monitor] = {}
        self._users: dict[Hashable, set[str]] = {}

    @staticmethod
    def key(component, attr: str, reducer: _RecordedReducer) -> Hashable:
        return (id(component), attr, reducer.signature)

    def add(self, user: str, component, attr: str, reducer: _RecordedReducer) -> Monitor:
        key = self.key(component, attr, reducer)
        if key not in self._monitors:
            self._monitors[key] = Monitor(lambda: getattr(component, attr), reducer, component)
            self._users[key] = set()
        self._users[key].add(user)
        return self._monitors[key]

    def release(self, user: str) -> None:
        for key in [k for k, users in self._users.items() if user in users]:
            self._users[key].discard(user)
            if not self._users[key]:
                del self._users[key]
                del self._monitors[key]

    def keys(self) -> set:
        return set(self._monitors)

    def __len__(self) -> int:
        return len(self._monitors)

    def monitors(self) -> list[Monitor]:
        return list(self._monitors.values())

    def observe(self) -> None:
        for monitor in self._monitors.values():
            monitor()

    def clear(self) -> None:
        for monitor in self._monitors.values():
            monitor.clear()


class CellTrainer:
    """Registers cells and manages their monitors.

    Subclasses implement ``_register`` (create monitors) and ``_stage``
    (compute and stage updates for one cell).
    """

    required: tuple[str, ...] = ()

    def __init__(self):
        self.pool = MonitorPool()
        self.cells: dict[str, Any] = {}
        self._state: dict[str, dict] = {}

    def register_cell(self, name: str, cell, **kwargs) -> dict:
        if name in self.cells:
            raise ValueError(f"a cell named {name!r} is already registered")
        if any(c is cell for c in self.cells.values()):
            raise ValueError("cell is already registered under another name")
        updater = cell.connection.updater
        if updater is None:
            raise ValueError("cell's connection has no updater; assign connection.defaultupdater()")
        missing = [p for p in self.required if p not in updater]
        if missing:
            raise ValueError(f"cell's updater has no accumulator for {missing}")
        state = self._register(name, cell, **kwargs)
        self.cells[name] = cell
        self._state[name] = state
        return state

    def unregister_cell(self, name: str) -> None:
        if name not in self.cells:
            raise KeyError(name)
        self.pool.release(name)
        del self.cells[name]
        del self._state[name]

    def _register(self, name: str, cell, **kwargs) -> dict:
        raise NotImplementedError

    def _stage(self, name: str, cell, state: dict) -> None:
        raise NotImplementedError

    def observe(self) -> None:
        self.pool.observe()

    def clear(self) -> None:
        self.pool.clear()

    def __call__(self) -> None:
        self.step()

    def step(self) -> None:
        """Fold every monitor once, then stage updates for each cell."""
        self.observe()
        for name, cell in self.cells.items():
            self._stage(name, cell, self._state[name])


def _stage_signed(acc, potentiation: np.ndarray, depression: np.ndarray) -> None:
    """Stage ``potentiation - depression`` with each side kept nonnegative."""
    acc.accumulate(np.maximum(potentiation, 0) + np.maximum(-depression, 0), "pos")
    acc.accumulate(np.maximum(depression, 0) + np.maximum(-potentiation, 0), "neg")


@dataclass(frozen=True)
class StdpConfig:
    """Pair-based STDP. Positive learning rates give Hebbian updates."""

    eta_pos: float = 1e-3
    eta_neg: float = 1e-3
    tau_pos: float = 20.0
    tau_neg: float = 20.0
    delay_aware: bool = False

    def __post_init__(self):
        if not (self.tau_pos > 0 and self.tau_neg > 0):
            raise ValueError("trace time constants must be positive")


class STDP(CellTrainer):
    """Trace-based all-to-all STDP on connection weights.

    Each step stages ``eta_pos * post_spike * pre_trace`` as potentiation and
    ``eta_neg * pre_spike * post_trace`` as depression, averaged over the
    batch. Traces include the current step's spikes, so coincident spikes
    count as both causal and anti-causal pairs.
    """

    required = ("weight",)

    def __init__(self, config: StdpConfig = StdpConfig()):
        super().__init__()
        self.config = config

    def _register(self, name, cell, config: Optional[StdpConfig] = None) -> dict:
        cfg = config or self.config
        conn, neuron = cell.connection, cell.neuron
        duration = conn.t_max if cfg.delay_aware else 0.0
        pre = self.pool.add(
            name, conn.synapse, "spike", CumulativeTraceReducer(conn.dt, cfg.tau_pos, duration=duration)
        )
        post = self.pool.add(name, neuron, "spike", CumulativeTraceReducer(neuron.dt, cfg.tau_neg))
        return {"config": cfg, "pre_trace": pre, "post_trace": post}

    def _stage(self, name, cell, state) -> None:
        cfg: StdpConfig = state["config"]
        conn, neuron = cell.connection, cell.neuron
        if cfg.delay_aware:
            pre_trace = conn.delayed_view(state["pre_trace"].reducer.record, _trace_interp(cfg.tau_pos))
            pre_spike = conn.synspike
        else:
            pre_trace = state["pre_trace"].peek()
            pre_spike = conn.synapse.spike
        post_spike = conn.postsyn_receptive(neuron.spike.astype(np.float32))
        post_trace = conn.postsyn_receptive(state["post_trace"].peek())

        ltp = _batch_mean(receptive_product(post_spike, conn.presyn_receptive(pre_trace)))
        ltd = _batch_mean(receptive_product(post_trace, conn.presyn_receptive(pre_spike.astype(np.float32))))
        ltp *= np.float32(cfg.eta_pos)
        ltd *= np.float32(cfg.eta_neg)
        acc = conn.updater.weight
        if cfg.eta_pos >= 0 and cfg.eta_neg >= 0:
            # traces and spikes are nonnegative, so both terms already are
            acc.accumulate(ltp, "pos")
            acc.accumulate(ltd, "neg")
        else:
            _stage_signed(acc, ltp, ltd)


def _batch_mean(x: np.ndarray) -> np.ndarray:
    return x[0] if x.shape[0] == 1 else x.mean(axis=0, dtype=np.float32)


def _trace_interp(tau: float):
    def interp(newer, older, offset, dt):
        return interp_expdecay(newer, older, offset, dt, time_constant=tau)

    return interp


@dataclass(frozen=True)
class DelayStdpConfig:
    """Delay-adjusted STDP for delays.

    ``b_neg`` applies when the post spike follows the delayed pre spike
    (``t_delta >= 0``), ``b_pos`` otherwise. ``b_neg < 0 < b_pos`` is Hebbian.
    """

    b_pos: float = 0.5
    b_neg: float = -0.5
    tau_pos: float = 20.0
    tau_neg: float = 20.0

    def __post_init__(self):
        if not (self.tau_pos > 0 and self.tau_neg > 0):
            raise ValueError("time constants must be positive")


def delay_adjustment(t_delta: np.ndarray, cfg: DelayStdpConfig) -> np.ndarray:
    """Change in delay for a delay-adjusted spike time difference ``t_delta``."""
    mag = np.abs(t_delta)
    return np.where(
        t_delta >= 0,
        cfg.b_neg * np.exp(-mag / cfg.tau_neg),
        cfg.b_pos * np.exp(-mag / cfg.tau_pos),
    )


class DelayAdjustedSTDPD(CellTrainer):
    """Learns connection delays from the last pre and post spike times.

    With ``t_delta = t_post - t_pre - D`` the delay changes by
    ``b_neg * exp(-|t_delta| / tau_neg)`` for ``t_delta >= 0`` and
    ``b_pos * exp(-|t_delta| / tau_pos)`` otherwise. Presynaptic times come
    from undelayed spikes. Pairs contribute only on steps where either side
    spikes, and only once both sides have spiked at least once.
    """

    required = ("delay",)

    def __init__(self, config: DelayStdpConfig = DelayStdpConfig()):
        super().__init__()
        self.config = config

    def _register(self, name, cell, config: Optional[DelayStdpConfig] = None) -> dict:
        conn, neuron = cell.connection, cell.neuron
        if not conn.delayed:
            raise ValueError("delay learning requires a connection with delays")
        post = self.pool.add(name, neuron, "spike", EventReducer(neuron.dt, "nan"))
        pre = self.pool.add(name, conn.synapse, "spike", EventReducer(conn.dt, "nan"))
        return {"config": config or self.config, "post": post, "pre": pre}

    def update_terms(self, cell, state) -> np.ndarray:
        """Per-parameter delay change for the current step (batch-averaged)."""
        cfg: DelayStdpConfig = state["config"]
        conn = cell.connection
        post = conn.postsyn_receptive(state["post"].peek())
        pre = conn.presyn_receptive(state["pre"].peek())
        delay = conn.delay.reshape(1, *conn.delay.shape, 1)
        t_delta = (pre - post) - delay  # t_post - t_pre - D from elapsed times
        change = delay_adjustment(t_delta, cfg)
        active = (post == 0) | (pre == 0)
        change = np.where(active, change, np.nan)
        return _batch_mean(np.nansum(change, axis=-1)).astype(np.float32)

    def _stage(self, name, cell, state) -> None:
        change = self.update_terms(cell, state)
        _stage_signed(cell.connection.updater.delay, change, np.zeros_like(change))
