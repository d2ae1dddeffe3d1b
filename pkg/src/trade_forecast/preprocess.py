"""Scaling, train/test splitting, and supervised window construction.

Scaling is min-max onto [0, 1]. By default the scaler is fitted on the
training partition only, so test values can land slightly outside [0, 1];
that is expected and the inverse transform stays exact either way.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantSeries, TooShort


class ScalerScope(str, enum.Enum):
    TRAIN_ONLY = "train_only"
    FULL_SERIES = "full_series"


@dataclass(frozen=True)
class ScalerParams:
    min_value: float
    max_value: float
    fit_scope: ScalerScope = ScalerScope.TRAIN_ONLY

    def __post_init__(self):
        if not self.max_value > self.min_value:
            raise ConstantSeries(
                f"max ({self.max_value}) must exceed min ({self.min_value})"
            )

    @property
    def span(self) -> float:
        return self.max_value - self.min_value


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class WindowedDataset:
    """Aligned (window, next value) pairs: ``inputs[k]`` ends right before
    ``targets[k]`` in the source series."""

    inputs: np.ndarray  # (n, lookback)
    targets: np.ndarray  # (n,)
    lookback: int

    def __len__(self) -> int:
        return len(self.targets)


def fit_scaler(values, scope: ScalerScope = ScalerScope.TRAIN_ONLY) -> ScalerParams:
    """Fit min/max over ``values``; a constant series cannot be scaled."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot fit a scaler on an empty sequence")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        raise ConstantSeries(f"all {arr.size} values equal {lo}")
    return ScalerParams(lo, hi, scope)


def scale(values, params: ScalerParams) -> np.ndarray:
    """Map each x to (x - min) / (max - min)."""
    arr = np.asarray(values, dtype=np.float64)
    return (arr - params.min_value) / params.span


def inverse_scale(scaled, params: ScalerParams) -> np.ndarray:
    """Exact inverse of :func:`scale`."""
    arr = np.asarray(scaled, dtype=np.float64)
    return arr * params.span + params.min_value


def split_values(values, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """First floor(n * train_fraction) values train, the rest test."""
    arr = np.asarray(values, dtype=np.float64)
    n = arr.size
    cut = math.floor(n * spec.train_fraction)
    if cut < 1 or n - cut < 1:
        raise TooShort(
            f"{n} values cannot be split {spec.train_fraction:.0%} train; "
            "both partitions need at least one value"
        )
    return arr[:cut].copy(), arr[cut:].copy()


def make_windows(values, lookback: int) -> WindowedDataset:
    """Slide a window of ``lookback`` values over the series; the value after
    each window is its target."""
    if lookback < 1:
        raise ValueError(f"lookback must be positive, got {lookback}")
    arr = np.asarray(values, dtype=np.float64)
    n = arr.size
    if n < lookback + 1:
        raise TooShort(f"need at least {lookback + 1} values, got {n}")
    count = n - lookback
    inputs = np.empty((count, lookback), dtype=np.float64)
    for k in range(count):
        inputs[k] = arr[k : k + lookback]
    targets = arr[lookback:].copy()
    return WindowedDataset(inputs, targets, lookback)
