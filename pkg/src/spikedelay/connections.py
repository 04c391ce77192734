"""Trainable mappings between neuron groups with optional per-weight delays.

Every connection owns a synapse built from a :class:`SynapseBlueprint`, reads
delayed synaptic state through its ``selector`` and exposes
``presyn_receptive`` / ``postsyn_receptive`` so that learning rules can form
``B x P1 x ... x Pn x R`` products without knowing the connection type.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .record import Interpolation, RecordTensor, bracket, interp_previous
from .synapses import DeltaSynapse, SynapseBlueprint
from .updaters import Accumulator, Sharp, Updater

__all__ = [
    "Connection",
    "LinearDense",
    "LinearDirect",
    "LinearLateral",
    "Conv2D",
    "conv_output_size",
    "unfold2d",
    "receptive_product",
]


def _as_shape(shape) -> tuple[int, ...]:
    shape = (int(shape),) if np.ndim(shape) == 0 else tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ValueError(f"invalid shape {shape}")
    return shape


def _pair(v) -> tuple[int, int]:
    if np.ndim(v) == 0:
        return int(v), int(v)
    a, b = v
    return int(a), int(b)


def conv_output_size(size: int, padding: int, dilation: int, kernel: int, stride: int) -> int:
    """Number of kernel placements along one dimension."""
    if size < 1 or kernel < 1 or stride < 1 or dilation < 1 or padding < 0:
        raise ValueError(
            f"invalid convolution geometry: size={size}, padding={padding}, "
            f"dilation={dilation}, kernel={kernel}, stride={stride}"
        )
    n = (size + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1
    if n < 1:
        raise ValueError(
            f"kernel of size {kernel} (dilation {dilation}) does not fit an extent "
            f"of {size} with padding {padding}"
        )
    return n


def unfold2d(x: np.ndarray, kernel, stride=1, padding=0, dilation=1) -> np.ndarray:
    """Extract convolution blocks from ``... x C x H x W``.

    Returns an array of shape ``... x C x kH x kW x LH x LW``; padding is
    zero-filled.
    """
    kh, kw = _pair(kernel)
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    dh, dw = _pair(dilation)
    lh = conv_output_size(x.shape[-2], ph, dh, kh, sh)
    lw = conv_output_size(x.shape[-1], pw, dw, kw, sw)
    pad = [(0, 0)] * (x.ndim - 2) + [(ph, ph), (pw, pw)]
    xp = np.pad(x, pad) if ph or pw else x
    win = sliding_window_view(xp, (dh * (kh - 1) + 1, dw * (kw - 1) + 1), axis=(-2, -1))
    win = win[..., ::sh, ::sw, ::dh, ::dw][..., :lh, :lw, :, :]
    return np.moveaxis(win, (-2, -1), (-4, -3))


def receptive_product(post: np.ndarray, pre: np.ndarray) -> np.ndarray:
    """Multiply receptive views and sum over the trailing receptive axis."""
    if post.ndim != pre.ndim:
        raise ValueError(f"receptive views differ in rank: {post.shape} and {pre.shape}")
    try:
        shape = np.broadcast_shapes(post.shape, pre.shape)
    except ValueError:
        raise ValueError(f"incompatible receptive views {post.shape} and {pre.shape}") from None
    if shape[-1] == 1:
        return (post * pre)[..., 0]
    return np.einsum("...r,...r->...", *np.broadcast_arrays(post, pre))


class Connection:
    """Base class: owns the synapse, the weight and optional delays.

    Subclasses define ``weight_shape``, ``forward`` and the receptive views.
    """

    def __init__(
        self,
        in_shape,
        dt: float,
        *,
        synapse: Optional[SynapseBlueprint] = None,
        delay: Optional[float] = None,
        batch_size: int = 1,
        synapse_shape=None,
    ):
        if not dt > 0:
            raise ValueError(f"step length must be positive, got {dt}")
        if delay is not None and delay < 0:
            raise ValueError(f"maximum delay must be nonnegative, got {delay}")
        if batch_size < 1:
            raise ValueError(f"batch size must be positive, got {batch_size}")
        self.in_shape = _as_shape(in_shape)
        self.dt = float(dt)
        self.batch_size = int(batch_size)
        self.t_max = float(delay) if delay is not None else 0.0
        blueprint = synapse if synapse is not None else DeltaSynapse.partialconstructor()
        self.synapse = blueprint(
            synapse_shape if synapse_shape is not None else self.in_shape,
            self.dt,
            self.t_max,
            self.batch_size,
        )
        self._delayed = delay is not None
        self._weight = np.zeros(self.weight_shape, dtype=np.float32)
        self._delay = np.zeros(self.weight_shape, dtype=np.float32) if self._delayed else None
        self.updater: Optional[Updater] = None

    weight_shape: tuple[int, ...] = ()

    @property
    def weight(self) -> np.ndarray:
        return self._weight

    @weight.setter
    def weight(self, value) -> None:
        value = np.asarray(value, dtype=np.float32)
        if value.shape != self.weight_shape:
            raise ValueError(f"expected weight of shape {self.weight_shape}, got {value.shape}")
        self._weight = self._mask_weight(value.copy())

    def _mask_weight(self, w: np.ndarray) -> np.ndarray:
        return w

    @property
    def delayed(self) -> bool:
        return self._delayed

    @property
    def delay(self) -> Optional[np.ndarray]:
        return self._delay

    @delay.setter
    def delay(self, value) -> None:
        if not self._delayed:
            raise RuntimeError("connection was built without delays")
        value = np.asarray(value, dtype=np.float32)
        if value.shape != self.weight_shape:
            raise ValueError(f"expected delay of shape {self.weight_shape}, got {value.shape}")
        self._delay = np.clip(value, 0, self.t_max).astype(np.float32)

    def defaultupdater(self) -> Updater:
        """Unbounded weight accumulator, plus delays hard-bounded to ``[0, t_max]``."""
        updater = Updater(weight=Accumulator(self.weight_shape))
        if self._delayed:
            updater.add(
                "delay",
                Accumulator(self.weight_shape, upper_bound=Sharp(self.t_max), lower_bound=Sharp(0.0)),
            )
        return updater

    def update(self) -> None:
        """Apply and clear every staged update."""
        if self.updater is None:
            return
        for name, acc in self.updater:
            if acc.staged:
                setattr(self, name, acc.apply(getattr(self, name)))

    def reset(self) -> None:
        self.synapse.reset()

    def __call__(self, spikes, *injected) -> np.ndarray:
        return self.forward(spikes, *injected)

    def forward(self, spikes, *injected) -> np.ndarray:
        raise NotImplementedError

    @property
    def selector(self) -> np.ndarray:
        raise NotImplementedError

    def delayed_view(self, record: RecordTensor, interp: Interpolation = interp_previous) -> np.ndarray:
        """Delay-shifted contents of a record laid out per synaptic pair."""
        raise NotImplementedError

    @property
    def synspike(self) -> np.ndarray:
        """Delayed input spikes per synaptic pair (boolean)."""
        return self.delayed_view(self.synapse.spike_record).astype(bool)

    @property
    def syncurrent(self) -> np.ndarray:
        """Delayed synaptic current per synaptic pair.

        Current injected on this step is added without delay.
        """
        current = self.synapse.scale * self.delayed_view(self.synapse.spike_record)
        injected = self.synapse.injected
        if injected is not None:
            current = current + self._expand_injected(injected)
        return current

    def _expand_injected(self, injected: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def presyn_receptive(self, inputs) -> np.ndarray:
        raise NotImplementedError

    def postsyn_receptive(self, outputs) -> np.ndarray:
        raise NotImplementedError


class LinearDense(Connection):
    """All-to-all linear mapping with weights of shape ``N_out x N_in``.

    Example:
        >>> conn = LinearDense((28, 28), 10, dt=1.2, delay=6.0, batch_size=20)
        >>> conn.selector.shape
        (1, 784, 10)
    """

    def __init__(
        self,
        in_shape,
        out_shape,
        dt: float,
        *,
        synapse: Optional[SynapseBlueprint] = None,
        delay: Optional[float] = None,
        batch_size: int = 1,
        weight=None,
        delay_init=None,
    ):
        in_shape = _as_shape(in_shape)
        self.out_shape = _as_shape(out_shape)
        self.in_features = math.prod(in_shape)
        self.out_features = math.prod(self.out_shape)
        self.weight_shape = (self.out_features, self.in_features)
        super().__init__(
            in_shape,
            dt,
            synapse=synapse,
            delay=delay,
            batch_size=batch_size,
            synapse_shape=(self.in_features,),
        )
        if weight is not None:
            self.weight = weight
        if delay_init is not None:
            self.delay = delay_init

    @property
    def selector(self) -> np.ndarray:
        if self._delay is None:
            return np.zeros((1, self.in_features, self.out_features), dtype=np.float32)
        return self._delay.T[None]

    def delayed_view(self, record, interp=interp_previous):
        if self._delay is None:
            latest = record.peek()
            return np.broadcast_to(latest[..., None], (*latest.shape, self.out_features))
        return record.select(self.selector, interp)

    def _expand_injected(self, injected):
        return injected[..., None]

    def forward(self, spikes, *injected) -> np.ndarray:
        b = self.batch_size
        spikes = np.asarray(spikes)
        if spikes.size != b * self.in_features:
            raise ValueError(
                f"expected input of shape {(b, *self.in_shape)}, got {spikes.shape}"
            )
        spikes = spikes.reshape(b, self.in_features)
        injected = [np.reshape(np.asarray(i, dtype=np.float32), (b, self.in_features)) for i in injected]
        current = self.synapse(spikes, *injected)
        if self._delay is None:
            out = current @ self._weight.T
        else:
            out = np.einsum("bio,oi->bo", self.syncurrent, self._weight)
        return out.astype(np.float32, copy=False).reshape(b, *self.out_shape)

    def presyn_receptive(self, inputs) -> np.ndarray:
        """``B x 1 x N_in x 1`` for raw inputs, ``B x N_out x N_in x 1`` for
        delay-shifted inputs laid out as ``B x N_in x N_out``."""
        inputs = np.asarray(inputs)
        b = self.batch_size
        if inputs.size == b * self.in_features:
            return inputs.reshape(b, 1, self.in_features, 1)
        if inputs.size == b * self.in_features * self.out_features:
            return np.swapaxes(inputs.reshape(b, self.in_features, self.out_features), 1, 2)[..., None]
        raise ValueError(f"cannot align inputs of shape {inputs.shape} with {type(self).__name__}")

    def postsyn_receptive(self, outputs) -> np.ndarray:
        outputs = np.asarray(outputs)
        if outputs.size != self.batch_size * self.out_features:
            raise ValueError(f"cannot align outputs of shape {outputs.shape} with {type(self).__name__}")
        return outputs.reshape(self.batch_size, self.out_features, 1, 1)


class _SquareLinear(LinearDense):
    def __init__(self, shape, dt, *, synapse=None, delay=None, batch_size=1, weight=None, delay_init=None):
        super().__init__(
            shape,
            shape,
            dt,
            synapse=synapse,
            delay=delay,
            batch_size=batch_size,
            weight=weight,
            delay_init=delay_init,
        )

    mask: np.ndarray

    def _mask_weight(self, w):
        return w * self.mask

    def update(self) -> None:
        super().update()
        self._weight = self._mask_weight(self._weight)


class LinearDirect(_SquareLinear):
    """One-to-one mapping: only the diagonal of the weight matrix is used."""

    @property
    def mask(self) -> np.ndarray:
        return np.eye(self.in_features, dtype=np.float32)


class LinearLateral(_SquareLinear):
    """All-to-all mapping excluding self connections (zero diagonal)."""

    @property
    def mask(self) -> np.ndarray:
        return 1 - np.eye(self.in_features, dtype=np.float32)


class Conv2D(Connection):
    """Two-dimensional convolution over ``C x H x W`` inputs.

    The kernel (``weight``) and delays have shape ``F x C x kH x kW``; outputs
    have shape ``F x LH x LW``.
    """

    def __init__(
        self,
        in_shape,
        filters: int,
        kernel,
        dt: float,
        *,
        stride=1,
        padding=0,
        dilation=1,
        synapse: Optional[SynapseBlueprint] = None,
        delay: Optional[float] = None,
        batch_size: int = 1,
        weight=None,
        delay_init=None,
    ):
        in_shape = _as_shape(in_shape)
        if len(in_shape) != 3:
            raise ValueError(f"expected input shape C x H x W, got {in_shape}")
        c, h, w = in_shape
        self.filters = int(filters)
        self.kernel_size = _pair(kernel)
        self.stride = _pair(stride)
        self.padding = _pair(padding)
        self.dilation = _pair(dilation)
        self.out_hw = (
            conv_output_size(h, self.padding[0], self.dilation[0], self.kernel_size[0], self.stride[0]),
            conv_output_size(w, self.padding[1], self.dilation[1], self.kernel_size[1], self.stride[1]),
        )
        self.out_shape = (self.filters, *self.out_hw)
        self.weight_shape = (self.filters, c, *self.kernel_size)
        super().__init__(in_shape, dt, synapse=synapse, delay=delay, batch_size=batch_size)
        if weight is not None:
            self.weight = weight
        if delay_init is not None:
            self.delay = delay_init

    @property
    def blocks(self) -> int:
        """Number of kernel placements ``L``."""
        return self.out_hw[0] * self.out_hw[1]

    def unfold(self, x: np.ndarray) -> np.ndarray:
        """``... x C x H x W`` to ``... x C x kH x kW x L``."""
        cols = unfold2d(x, self.kernel_size, self.stride, self.padding, self.dilation)
        return cols.reshape(*cols.shape[:-2], self.blocks)

    @property
    def selector(self) -> np.ndarray:
        if self._delay is None:
            return np.zeros(self.weight_shape, dtype=np.float32)
        return self._delay

    def delayed_view(self, record, interp=interp_previous):
        """Delayed blocks of shape ``B x F x C x kH x kW x L``."""
        b, f, l = self.batch_size, self.filters, self.blocks
        if self._delay is None:
            cols = self.unfold(record.peek())[:, None]
            return np.broadcast_to(cols, (b, f, *self.weight_shape[1:], l))
        history = self.unfold(record.aligned())  # A x B x C x kH x kW x L
        k0, k1, offset, exact = bracket(self._delay, record.dt, record.size - 1)
        _, c, kh, kw = self.weight_shape
        ci = np.arange(c)[None, :, None, None]
        hi = np.arange(kh)[None, None, :, None]
        wi = np.arange(kw)[None, None, None, :]
        # advanced indices split by a slice land in front: F x C x kH x kW x B x L
        newer = np.moveaxis(history[k0, :, ci, hi, wi, :], 4, 0)
        if np.all(exact):
            return newer
        older = np.moveaxis(history[k1, :, ci, hi, wi, :], 4, 0)
        offset = offset[None, ..., None]
        mixed = interp(newer, older, offset, record.dt)
        return np.where(exact[None, ..., None], newer, mixed).astype(np.float32)

    def _expand_injected(self, injected):
        return self.unfold(injected)[:, None]

    def forward(self, spikes, *injected) -> np.ndarray:
        b = self.batch_size
        spikes = np.asarray(spikes)
        if spikes.shape != (b, *self.in_shape):
            raise ValueError(f"expected input of shape {(b, *self.in_shape)}, got {spikes.shape}")
        current = self.synapse(spikes, *injected)
        if self._delay is None:
            cols = self.unfold(current)
            out = np.einsum("bcijl,fcij->bfl", cols, self._weight, optimize=True)
        else:
            out = np.einsum("bfcijl,fcij->bfl", self.syncurrent, self._weight, optimize=True)
        return out.astype(np.float32, copy=False).reshape(b, *self.out_shape)

    def presyn_receptive(self, inputs) -> np.ndarray:
        """``B x 1 x C x kH x kW x L`` for raw ``B x C x H x W`` inputs;
        delayed blocks (``B x F x C x kH x kW x L``) pass through."""
        inputs = np.asarray(inputs)
        b = self.batch_size
        if inputs.shape == (b, *self.in_shape):
            return self.unfold(inputs)[:, None]
        if inputs.shape == (b, *self.weight_shape, self.blocks):
            return inputs
        raise ValueError(f"cannot align inputs of shape {inputs.shape} with Conv2D")

    def postsyn_receptive(self, outputs) -> np.ndarray:
        outputs = np.asarray(outputs)
        if outputs.size != self.batch_size * self.filters * self.blocks:
            raise ValueError(f"cannot align outputs of shape {outputs.shape} with Conv2D")
        return outputs.reshape(self.batch_size, self.filters, 1, 1, 1, self.blocks)
