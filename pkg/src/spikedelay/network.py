"""Layers: wiring connections to neuron groups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .connections import Connection, LinearDense, LinearDirect, LinearLateral
from .neurons import ALIF, LIF, NeuronGroup
from .synapses import SynapseBlueprint

__all__ = ["Cell", "Layer", "SerialLayer", "DiehlCookLayer"]


@dataclass(frozen=True, eq=False)
class Cell:
    """A trainable connection paired with the neurons it drives."""

    connection: Connection
    neuron: NeuronGroup

    @property
    def updater(self):
        return self.connection.updater


class Layer:
    """Base layer. Subclasses populate ``cells`` and define ``forward``."""

    def __init__(self):
        self.cells: dict[str, Cell] = {}

    def connections(self) -> list[Connection]:
        seen: dict[int, Connection] = {}
        for cell in self.cells.values():
            seen.setdefault(id(cell.connection), cell.connection)
        return list(seen.values())

    def neurons(self) -> list[NeuronGroup]:
        seen: dict[int, NeuronGroup] = {}
        for cell in self.cells.values():
            seen.setdefault(id(cell.neuron), cell.neuron)
        return list(seen.values())

    def __call__(self, *inputs) -> np.ndarray:
        return self.forward(*inputs)

    def forward(self, *inputs) -> np.ndarray:
        raise NotImplementedError

    def update(self) -> None:
        for conn in self.connections():
            conn.update()

    def reset(self) -> None:
        for conn in self.connections():
            conn.reset()
        for neuron in self.neurons():
            neuron.reset()


class SerialLayer(Layer):
    """One connection feeding one neuron group."""

    def __init__(self, connection: Connection, neuron: NeuronGroup):
        super().__init__()
        self.cells["main"] = Cell(connection, neuron)

    @property
    def cell(self) -> Cell:
        return self.cells["main"]

    @property
    def connection(self) -> Connection:
        return self.cell.connection

    @property
    def neuron(self) -> NeuronGroup:
        return self.cell.neuron

    def forward(self, spikes, *injected) -> np.ndarray:
        return self.neuron(self.connection(spikes, *injected))


class DiehlCookLayer(Layer):
    """Excitatory group with lateral inhibition through an inhibitory group.

    Excitatory input is the feedforward current minus ``inhibition_gain``
    times the inhibition driven by the previous step's inhibitory spikes.
    Inhibitory input comes one-to-one from the previous step's excitatory
    spikes. Returns excitatory spikes.
    """

    def __init__(
        self,
        feedforward: Connection,
        apply_inhibition: Connection,
        trigger_inhibition: Connection,
        excitatory: NeuronGroup,
        inhibitory: NeuronGroup,
        inhibition_gain: float = 1.0,
    ):
        super().__init__()
        self.cells["feedforward"] = Cell(feedforward, excitatory)
        self.cells["apply_inhibition"] = Cell(apply_inhibition, excitatory)
        self.cells["trigger_inhibition"] = Cell(trigger_inhibition, inhibitory)
        self.feedforward = feedforward
        self.apply_inhibition = apply_inhibition
        self.trigger_inhibition = trigger_inhibition
        self.excitatory = excitatory
        self.inhibitory = inhibitory
        self.inhibition_gain = float(inhibition_gain)
        self._clear_buffers()

    @classmethod
    def build(
        cls,
        in_shape,
        neurons: int,
        dt: float,
        *,
        batch_size: int = 1,
        synapse: Optional[SynapseBlueprint] = None,
        delay: Optional[float] = None,
        excitation: float = 22.5,
        inhibition: float = 17.5,
        inhibition_gain: float = 1.0,
        excitatory_kw: Optional[dict] = None,
        inhibitory_kw: Optional[dict] = None,
    ) -> "DiehlCookLayer":
        """Layer with uniform trigger (``excitation``) and lateral
        (``inhibition``) weights; feedforward weights start at zero."""
        ff = LinearDense(in_shape, neurons, dt, synapse=synapse, delay=delay, batch_size=batch_size)
        lateral = LinearLateral(
            neurons, dt, synapse=synapse, batch_size=batch_size,
            weight=np.full((neurons, neurons), inhibition, dtype=np.float32),
        )
        direct = LinearDirect(
            neurons, dt, synapse=synapse, batch_size=batch_size,
            weight=np.full((neurons, neurons), excitation, dtype=np.float32),
        )
        exc = ALIF(neurons, dt, batch_size=batch_size, **(excitatory_kw or {}))
        inh = LIF(neurons, dt, batch_size=batch_size, **(inhibitory_kw or {}))
        return cls(ff, lateral, direct, exc, inh, inhibition_gain)

    def _clear_buffers(self) -> None:
        self.exc_buffer = np.zeros(self.excitatory.batched_shape, dtype=bool)
        self.inh_buffer = np.zeros(self.inhibitory.batched_shape, dtype=bool)

    def reset(self) -> None:
        super().reset()
        self._clear_buffers()

    def forward(self, spikes, *injected) -> np.ndarray:
        inhibition = self.apply_inhibition(self.inh_buffer)
        drive = self.feedforward(spikes, *injected) - np.float32(self.inhibition_gain) * inhibition
        exc = self.excitatory(drive)
        inh = self.inhibitory(self.trigger_inhibition(self.exc_buffer))
        self.exc_buffer, self.inh_buffer = exc, inh
        return exc
