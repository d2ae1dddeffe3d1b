"""One-step historical prediction and multi-step recursive forecasting.

The recursive loop runs in scaled space: each prediction is appended to
the input window to produce the next step, so a lookback-1 model that has
learned a near-identity map settles onto a fixed point and the forecast
flattens out. Values are inverse-scaled once at the end.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadHorizon, LookbackMismatch, NonFiniteForecast
from .lstm_core import Model
from .preprocess import WindowedDataset, inverse_scale

DEFAULT_HORIZON = 180


@dataclass(frozen=True)
class ForecastResult:
    """A dated recursive forecast in scaled and original units."""

    start_date: dt.date
    scaled_values: np.ndarray
    original_values: np.ndarray
    horizon: int

    def __post_init__(self):
        if len(self.scaled_values) != self.horizon or len(self.original_values) != self.horizon:
            raise ValueError("scaled and original values must both cover the horizon")

    def dates(self) -> list[dt.date]:
        one = dt.timedelta(days=1)
        return [self.start_date + k * one for k in range(self.horizon)]


def predict_one_step_series(model: Model, dataset: WindowedDataset) -> np.ndarray:
    """Teacher-forced predictions, one per window, in dataset order."""
    if len(dataset) and dataset.lookback != model.lookback:
        raise LookbackMismatch(
            f"dataset lookback {dataset.lookback} != model lookback {model.lookback}"
        )
    return np.array([model.predict(w) for w in dataset.inputs], dtype=np.float64)


def recursive_forecast(model, seed_window, horizon: int) -> np.ndarray:
    """Iterate the model ``horizon`` steps, feeding each prediction back in.

    ``model`` only needs a ``predict(window) -> float`` method, so simple
    stand-ins work for testing the loop itself. ``seed_window`` must hold
    the last ``lookback`` scaled observations.
    """
    if horizon < 1:
        raise BadHorizon(f"horizon must be >= 1, got {horizon}")
    window = [float(v) for v in seed_window]
    lookback = getattr(model, "lookback", len(window))
    if len(window) != lookback:
        raise LookbackMismatch(
            f"seed window has {len(window)} values, model lookback is {lookback}"
        )
    out = np.empty(horizon, dtype=np.float64)
    for step in range(horizon):
        prediction = float(model.predict(window))
        if not math.isfinite(prediction):
            raise NonFiniteForecast(f"non-finite prediction at step {step}")
        out[step] = prediction
        window = window[1:] + [prediction]
    return out


def extend_dates(last_observed: dt.date, horizon: int) -> list[dt.date]:
    """The ``horizon`` calendar days following ``last_observed``."""
    if horizon < 1:
        raise BadHorizon(f"horizon must be >= 1, got {horizon}")
    one = dt.timedelta(days=1)
    return [last_observed + (k + 1) * one for k in range(horizon)]


def make_forecast_result(
    model: Model, scaled_history, last_observed: dt.date, horizon: int
) -> ForecastResult:
    """Forecast from the tail of ``scaled_history`` and attach dates/units."""
    history = np.asarray(scaled_history, dtype=np.float64)
    if history.size < model.lookback:
        raise LookbackMismatch(
            f"history has {history.size} values, need at least {model.lookback}"
        )
    scaled = recursive_forecast(model, history[-model.lookback:], horizon)
    original = inverse_scale(scaled, model.scaler)
    bad = np.flatnonzero(~np.isfinite(original))
    if bad.size:
        raise NonFiniteForecast(f"non-finite value at step {int(bad[0])} after unscaling")
    return ForecastResult(
        start_date=last_observed + dt.timedelta(days=1),
        scaled_values=scaled,
        original_values=original,
        horizon=horizon,
    )


def fixed_point_drift(scaled_forecast: np.ndarray) -> np.ndarray:
    """Per-step change |x_{k+1} - x_k|; near zero once the loop has settled."""
    arr = np.asarray(scaled_forecast, dtype=np.float64)
    return np.abs(np.diff(arr))
