"""Spiking neural networks on NumPy with learnable per-weight delays."""

from .connections import Conv2D, LinearDense, LinearDirect, LinearLateral, conv_output_size, receptive_product
from .encode import PoissonEncoderConfig, poisson_encode
from .learn import (
    STDP,
    CellTrainer,
    CumulativeTraceReducer,
    DelayAdjustedSTDPD,
    DelayStdpConfig,
    EventReducer,
    Monitor,
    MonitorPool,
    StdpConfig,
)
from .network import Cell, DiehlCookLayer, SerialLayer
from .neurons import ALIF, GLIF2, LIF, NeuronGroup
from .record import RecordTensor
from .synapses import DeltaPlusSynapse, DeltaSynapse, SynapseBlueprint
from .updaters import Accumulator, FullBounding, PowerLaw, Sharp, Updater

__all__ = [
    "RecordTensor",
    "NeuronGroup",
    "LIF",
    "ALIF",
    "GLIF2",
    "DeltaSynapse",
    "DeltaPlusSynapse",
    "SynapseBlueprint",
    "LinearDense",
    "LinearDirect",
    "LinearLateral",
    "Conv2D",
    "conv_output_size",
    "receptive_product",
    "PowerLaw",
    "Sharp",
    "FullBounding",
    "Accumulator",
    "Updater",
    "CumulativeTraceReducer",
    "EventReducer",
    "Monitor",
    "MonitorPool",
    "CellTrainer",
    "StdpConfig",
    "STDP",
    "DelayStdpConfig",
    "DelayAdjustedSTDPD",
    "PoissonEncoderConfig",
    "poisson_encode",
    "Cell",
    "SerialLayer",
    "DiehlCookLayer",
]
