"""MSE loss, Adam, and the per-sample training loop.

Training walks the samples in temporal order (optionally shuffled by a
seeded generator), one forward/backward/optimizer step per sample, for a
fixed number of epochs. Given the same seed, data, and config the loop
is bit-for-bit deterministic.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyDataset, LengthMismatch, NonFiniteLoss, ShapeMismatch
from .lstm_core import Model, flatten_params, flatten_records, model_backward, \
    model_forward, model_from_flat, unflatten_params
from .preprocess import WindowedDataset
from .rng import GOLDEN_GAMMA, SplitMix64

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    train_fraction: float = 0.7
    batch_size: int = 1
    epochs: int = 100
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_adam: float = 1e-8
    shuffle: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.learning_rate <= 0 or self.epsilon_adam <= 0:
            raise ValueError("learning_rate and epsilon_adam must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must be in (0, 1)")


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the flat parameter vector."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n, dtype=np.float64), np.zeros(n, dtype=np.float64))


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    final_train_loss: float = math.nan
    final_test_loss: float = math.nan
    wall_time: float = 0.0


def mse(predictions, targets) -> float:
    """(1/n) * sum of squared errors."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} targets")
    if p.size == 0:
        raise EmptyDataset("mse of zero samples is undefined")
    return float(np.mean((p - t) ** 2))


def mse_grad(prediction: float, target: float) -> float:
    """d/d(prediction) of the single-sample squared error."""
    return 2.0 * (prediction - target)


def adam_step(
    params: np.ndarray, grads: np.ndarray, state: AdamState, config: TrainConfig
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; pure, inputs untouched.

    t' = t + 1
    m' = beta1 * m + (1 - beta1) * g        mhat = m' / (1 - beta1^t')
    v' = beta2 * v + (1 - beta2) * g^2      vhat = v' / (1 - beta2^t')
    theta' = theta - alpha * mhat / (sqrt(vhat) + eps)
    """
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeMismatch(
            f"params {params.shape}, grads {grads.shape}, state {state.m.shape}"
        )
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1 ** t)
    v_hat = v / (1.0 - config.beta2 ** t)
    updated = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon_adam)
    return updated, AdamState(m, v, t)


def evaluate_loss(model: Model, dataset: WindowedDataset) -> float:
    """Mean per-sample scaled MSE without any parameter updates."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    total = 0.0
    for window, target in zip(dataset.inputs, dataset.targets):
        pred, _ = model_forward(model, window)
        total += (pred - target) ** 2
    return total / len(dataset)


def train_model(
    model: Model,
    train_data: WindowedDataset,
    test_data: WindowedDataset,
    config: TrainConfig,
) -> tuple[Model, TrainReport]:
    """Train a copy of ``model``; the input model is left untouched.

    Per epoch, each training sample contributes one forward pass, one MSE
    evaluation, one backward pass, and one Adam step. The report's epoch
    losses are the means of those per-sample losses; the final train/test
    losses are measured afterwards with the parameters frozen.
    """
    if config.batch_size != 1:
        raise ValueError(
            "the per-sample training loop supports batch_size=1 only; "
            f"got {config.batch_size}"
        )
    if len(train_data) == 0 or len(test_data) == 0:
        raise EmptyDataset(
            f"train has {len(train_data)} samples, test has {len(test_data)}"
        )
    if train_data.lookback != model.lookback or test_data.lookback != model.lookback:
        raise ValueError(
            f"datasets built with lookback {train_data.lookback}/{test_data.lookback}, "
            f"model expects {model.lookback}"
        )

    started = time.perf_counter()
    flat = flatten_params(model)
    work = model_from_flat(model, flat)  # parameter arrays view `flat`
    state = AdamState.zeros(flat.size)
    # Independent stream from the init draws so adding shuffle never
    # perturbs the initial weights.
    order_rng = SplitMix64(config.seed ^ GOLDEN_GAMMA)

    report = TrainReport()
    indices = list(range(len(train_data)))
    for epoch in range(config.epochs):
        if config.shuffle:
            order_rng.shuffle(indices)
        epoch_total = 0.0
        for k in indices:
            prediction, cache = model_forward(work, train_data.inputs[k])
            target = float(train_data.targets[k])
            loss = (prediction - target) ** 2
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"loss diverged at epoch {epoch}, sample {k}")
            epoch_total += loss
            grads = model_backward(work, cache, mse_grad(prediction, target))
            flat_next, state = adam_step(flat, flatten_records(grads), state, config)
            flat[:] = flat_next
        report.epoch_losses.append(epoch_total / len(indices))
        if epoch == 0 or (epoch + 1) % 10 == 0:
            log.info("epoch %d/%d: loss %.6g", epoch + 1, config.epochs,
                     report.epoch_losses[-1])

    trained = replace(
        model, params=unflatten_params(model.specs, flat.copy()), seed=model.seed
    )
    report.final_train_loss = evaluate_loss(trained, train_data)
    report.final_test_loss = evaluate_loss(trained, test_data)
    report.wall_time = time.perf_counter() - started
    return trained, report
