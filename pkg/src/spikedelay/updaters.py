"""Staged parameter updates with parameter-dependent bounding.

Training rules hand nonnegative potentiative (``pos``) and depressive
(``neg``) magnitudes to an :class:`Accumulator`. On application each list is
reduced, scaled by the bounding rules, and applied as
``param + S(pos) - S(neg)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "PowerLaw",
    "Sharp",
    "FullBounding",
    "Accumulator",
    "Updater",
]


@dataclass(frozen=True)
class PowerLaw:
    """Soft bound: scale updates by the distance to ``limit`` raised to ``power``.

    Updates are zero at or past the limit for every power, including 0.
    """

    limit: float
    power: float

    def __post_init__(self):
        if self.power < 0:
            raise ValueError(f"power must be nonnegative, got {self.power}")

    def upper(self, param, update):
        gap = np.asarray(self.limit - param, dtype=np.float32)
        return np.where(gap > 0, np.maximum(gap, 0) ** self.power, 0) * update

    def lower(self, param, update):
        gap = np.asarray(param - self.limit, dtype=np.float32)
        return np.where(gap > 0, np.maximum(gap, 0) ** self.power, 0) * update

    def confine_upper(self, param):
        return param

    def confine_lower(self, param):
        return param


@dataclass(frozen=True)
class Sharp:
    """Hard bound: no movement past ``limit``, and results are clamped to it."""

    limit: float

    def upper(self, param, update):
        return update * (np.asarray(param) < self.limit)

    def lower(self, param, update):
        return update * (np.asarray(param) > self.limit)

    def confine_upper(self, param):
        return np.minimum(param, self.limit)

    def confine_lower(self, param):
        return np.maximum(param, self.limit)


HalfBounding = Union[PowerLaw, Sharp]


@dataclass(frozen=True)
class FullBounding:
    upper: HalfBounding
    lower: HalfBounding


Reduction = Union[str, Callable[[np.ndarray], np.ndarray]]


class Accumulator:
    """Collects potentiative and depressive updates for one parameter.

    Args:
        shape: parameter shape; staged tensors must match it.
        reduction: ``"mean"``, ``"sum"`` or a callable reducing along axis 0.
        upper_bound: rule scaling potentiation near the upper limit.
        lower_bound: rule scaling depression near the lower limit.
        full_bound: both rules at once, exclusive with the half rules.
    """

    def __init__(
        self,
        shape,
        reduction: Reduction = "mean",
        upper_bound: Optional[HalfBounding] = None,
        lower_bound: Optional[HalfBounding] = None,
        full_bound: Optional[FullBounding] = None,
    ):
        if full_bound is not None and (upper_bound is not None or lower_bound is not None):
            raise ValueError("full bounding cannot be combined with half bounding")
        if full_bound is not None:
            upper_bound, lower_bound = full_bound.upper, full_bound.lower
        if isinstance(reduction, str) and reduction not in ("mean", "sum"):
            raise ValueError(f"unknown reduction {reduction!r}")
        self.shape = tuple(shape)
        self.reduction = reduction
        self.upper_bound = upper_bound
        self.lower_bound = lower_bound
        self.pos: list[np.ndarray] = []
        self.neg: list[np.ndarray] = []

    @property
    def staged(self) -> bool:
        return bool(self.pos or self.neg)

    def accumulate(self, update, sign: str = "pos") -> None:
        update = np.asarray(update, dtype=np.float32)
        if update.shape != self.shape:
            raise ValueError(f"expected update of shape {self.shape}, got {update.shape}")
        if update.size and update.min() < 0:
            raise ValueError("staged updates must be nonnegative")
        if sign == "pos":
            self.pos.append(update)
        elif sign == "neg":
            self.neg.append(update)
        else:
            raise ValueError(f"sign must be 'pos' or 'neg', got {sign!r}")

    def __call__(self, pos=None, neg=None) -> None:
        if pos is not None:
            self.accumulate(pos, "pos")
        if neg is not None:
            self.accumulate(neg, "neg")

    def _reduce(self, updates: list[np.ndarray]):
        if not updates:
            return None
        if len(updates) == 1:
            return updates[0]
        stacked = np.stack(updates)
        if self.reduction == "mean":
            return stacked.mean(axis=0)
        if self.reduction == "sum":
            return stacked.sum(axis=0)
        return self.reduction(stacked)

    def clear(self) -> None:
        self.pos.clear()
        self.neg.clear()

    def apply(self, param: np.ndarray) -> np.ndarray:
        """Return the updated parameter and clear the staged updates."""
        pos, neg = self._reduce(self.pos), self._reduce(self.neg)
        self.clear()
        out = np.array(param, dtype=np.float32)
        if pos is not None:
            if self.upper_bound is not None:
                pos = self.upper_bound.upper(param, pos)
            out += pos
        if neg is not None:
            if self.lower_bound is not None:
                neg = self.lower_bound.lower(param, neg)
            out -= neg
        if self.upper_bound is not None:
            out = self.upper_bound.confine_upper(out)
        if self.lower_bound is not None:
            out = self.lower_bound.confine_lower(out)
        return np.asarray(out, dtype=np.float32)


class Updater:
    """Accumulators for the trainable parameters of one connection.

    Accumulators are reachable as attributes, e.g. ``updater.weight``.
    """

    def __init__(self, **accumulators: Accumulator):
        self._accumulators: dict[str, Accumulator] = dict(accumulators)

    def __getattr__(self, name: str) -> Accumulator:
        try:
            return self.__dict__["_accumulators"][name]
        except KeyError:
            raise AttributeError(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._accumulators

    def __iter__(self):
        return iter(self._accumulators.items())

    def add(self, name: str, accumulator: Accumulator) -> None:
        self._accumulators[name] = accumulator
