"""From-scratch numerics for a stacked LSTM -> dense regression head.

Conventions used throughout:

* Gate blocks are stacked in the order input, forget, candidate, output.
  An LSTM layer with ``u`` units and ``d`` inputs keeps its input weights
  as one ``(4u, d)`` matrix ``w``, its recurrent weights as ``(4u, u)``
  ``u_rec``, and its biases as ``(4u,)`` ``b``; rows ``[0:u)`` belong to
  the input gate, ``[u:2u)`` to the forget gate, ``[2u:3u)`` to the
  candidate, ``[3u:4u)`` to the output gate.
* Cell equations, with sigma the logistic function and * elementwise:

      i = sigma(W_i x + U_i h_prev + b_i)
      f = sigma(W_f x + U_f h_prev + b_f)
      g = tanh (W_g x + U_g h_prev + b_g)      (candidate)
      o = sigma(W_o x + U_o h_prev + b_o)
      c = f * c_prev + i * g
      h = o * tanh(c)

* Hidden and cell state start at zero for every sample (stateless
  between samples), and all arithmetic is float64.
* Initialization is deterministic: Glorot-uniform draws from a seeded
  SplitMix64, layer by layer, input weights before recurrent weights,
  gate blocks in the order above, row-major within each matrix; biases
  are zero except the forget-gate bias, which starts at 1. The dense
  head draws its weight the same way with a zero bias.
"""

from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadChain, DimensionMismatch, StaleCache
from .preprocess import ScalerParams
from .rng import SplitMix64

GATE_ORDER = ("input", "forget", "candidate", "output")


class LayerKind(str, enum.Enum):
    LSTM = "lstm"
    DENSE = "dense"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    input_dim: int
    units: int
    returns_sequence: bool = False

    def __post_init__(self):
        if self.input_dim < 1 or self.units < 1:
            raise ValueError("input_dim and units must be positive")


def default_layer_specs() -> tuple[LayerSpec, ...]:
    """The default stack: LSTM(1->4, sequence) -> LSTM(4->1) -> Dense(1->1)."""
    return (
        LayerSpec(LayerKind.LSTM, input_dim=1, units=4, returns_sequence=True),
        LayerSpec(LayerKind.LSTM, input_dim=4, units=1, returns_sequence=False),
        LayerSpec(LayerKind.DENSE, input_dim=1, units=1),
    )


@dataclass
class LstmLayerParams:
    """Stacked-gate parameter block; also reused as the gradient record."""

    w: np.ndarray      # (4*units, input_dim)
    u_rec: np.ndarray  # (4*units, units)
    b: np.ndarray      # (4*units,)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w, self.u_rec, self.b)


@dataclass
class DenseParams:
    w: np.ndarray  # (units, input_dim)
    b: np.ndarray  # (units,)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w, self.b)


LayerParams = LstmLayerParams | DenseParams


@dataclass(slots=True)
class CellCache:
    """Everything one timestep needs to replay its forward pass."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


@dataclass(slots=True)
class ForwardCache:
    window: np.ndarray
    layer_caches: list  # one list[CellCache] per LSTM layer
    dense_input: np.ndarray
    prediction: float


@dataclass
class Model:
    """Immutable-by-convention parameter set plus the scaler that maps its
    inputs; ``predict`` runs a window through the stack."""

    specs: tuple[LayerSpec, ...]
    params: list[LayerParams]
    scaler: ScalerParams | None
    lookback: int
    seed: int

    def __post_init__(self):
        self.specs = tuple(self.specs)
        actual = sum(a.size for p in self.params for a in p.arrays())
        expected = sum(param_count(s) for s in self.specs)
        if actual != expected:
            raise BadChain(f"parameter arrays hold {actual} values, specs say {expected}")

    @property
    def param_total(self) -> int:
        return sum(param_count(s) for s in self.specs)

    def predict(self, window) -> float:
        return model_forward(self, window)[0]

    def clone(self) -> "Model":
        return replace(self, params=copy.deepcopy(self.params))


def param_count(spec: LayerSpec) -> int:
    """Trainable parameters in one layer."""
    if spec.kind is LayerKind.LSTM:
        return 4 * ((spec.input_dim + spec.units + 1) * spec.units)
    return spec.input_dim * spec.units + spec.units


def validate_chain(specs) -> None:
    """Check that layer dimensions chain and the stack ends in a Dense(1)."""
    specs = tuple(specs)
    if not specs:
        raise BadChain("no layers")
    for prev, cur in zip(specs, specs[1:]):
        if prev.units != cur.input_dim:
            raise BadChain(
                f"layer with {prev.units} units feeds layer expecting {cur.input_dim} inputs"
            )
    last = specs[-1]
    if last.kind is not LayerKind.DENSE or last.units != 1:
        raise BadChain("final layer must be dense with one unit")
    lstm_specs = [s for s in specs[:-1] if s.kind is LayerKind.LSTM]
    if len(lstm_specs) != len(specs) - 1:
        raise BadChain("only LSTM layers may precede the dense head")
    for s in lstm_specs[:-1]:
        if not s.returns_sequence:
            raise BadChain("inner LSTM layers must return sequences")
    if lstm_specs and lstm_specs[-1].returns_sequence:
        raise BadChain("the LSTM layer feeding the dense head must not return sequences")


def _glorot(rng: SplitMix64, rows: int, cols: int, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    draws = [rng.uniform(-limit, limit) for _ in range(rows * cols)]
    return np.array(draws, dtype=np.float64).reshape(rows, cols)


def init_model(specs, scaler: ScalerParams | None, lookback: int, seed: int) -> Model:
    """Build a deterministically initialized model (see module docstring for
    the exact draw order)."""
    specs = tuple(specs)
    validate_chain(specs)
    if lookback < 1:
        raise ValueError(f"lookback must be positive, got {lookback}")
    rng = SplitMix64(seed)
    params: list[LayerParams] = []
    for spec in specs:
        if spec.kind is LayerKind.LSTM:
            d, u = spec.input_dim, spec.units
            w = _glorot(rng, 4 * u, d, fan_in=d, fan_out=u)
            u_rec = _glorot(rng, 4 * u, u, fan_in=u, fan_out=u)
            b = np.zeros(4 * u, dtype=np.float64)
            b[u : 2 * u] = 1.0  # forget gate starts open
            params.append(LstmLayerParams(w, u_rec, b))
        else:
            w = _glorot(rng, spec.units, spec.input_dim,
                        fan_in=spec.input_dim, fan_out=spec.units)
            params.append(DenseParams(w, np.zeros(spec.units, dtype=np.float64)))
    return Model(specs, params, scaler, lookback, seed)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp of -|z| never overflows; both branches share it
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def cell_forward(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    params: LstmLayerParams,
) -> tuple[np.ndarray, np.ndarray, CellCache]:
    """One LSTM timestep; returns (h, c, cache-of-gate-activations)."""
    units = params.u_rec.shape[1]
    if x.shape != (params.w.shape[1],) or h_prev.shape != (units,):
        raise DimensionMismatch(
            f"x{x.shape}, h{h_prev.shape} incompatible with "
            f"W{params.w.shape}, U{params.u_rec.shape}"
        )
    z = params.w @ x + params.u_rec @ h_prev + params.b
    sig = _sigmoid(z)
    i = sig[:units]
    f = sig[units : 2 * units]
    g = np.tanh(z[2 * units : 3 * units])
    o = sig[3 * units :]
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c

    assert np.all((i > 0.0) & (i < 1.0)) and np.all((f > 0.0) & (f < 1.0))
    assert np.all((o > 0.0) & (o < 1.0))
    assert np.all(np.abs(g) < 1.0) and np.all(np.abs(tanh_c) < 1.0)

    return h, c, CellCache(x, h_prev, c_prev, i, f, g, o, c, tanh_c)


def _lstm_layer_forward(
    params: LstmLayerParams, inputs: np.ndarray
) -> tuple[np.ndarray, list[CellCache]]:
    """Run a (T, input_dim) sequence from zero state; returns per-step hidden
    states (T, units) and the per-step caches."""
    steps, units = inputs.shape[0], params.u_rec.shape[1]
    h = np.zeros(units, dtype=np.float64)
    c = np.zeros(units, dtype=np.float64)
    hs = np.empty((steps, units), dtype=np.float64)
    caches: list[CellCache] = []
    for t in range(steps):
        h, c, cache = cell_forward(inputs[t], h, c, params)
        hs[t] = h
        caches.append(cache)
    return hs, caches


def model_forward(model: Model, window) -> tuple[float, ForwardCache]:
    """Run one window through the stack; states reset to zero per sample."""
    arr = np.asarray(window, dtype=np.float64).reshape(-1)
    if arr.shape != (model.lookback,):
        raise DimensionMismatch(
            f"window has {arr.size} values, model lookback is {model.lookback}"
        )
    seq = arr.reshape(-1, 1)
    layer_caches = []
    for spec, params in zip(model.specs, model.params):
        if spec.kind is not LayerKind.LSTM:
            break
        hs, caches = _lstm_layer_forward(params, seq)
        layer_caches.append(caches)
        seq = hs if spec.returns_sequence else hs[-1]
    dense = model.params[-1]
    dense_input = np.asarray(seq, dtype=np.float64).reshape(-1)
    prediction = float(dense.w @ dense_input + dense.b)
    return prediction, ForwardCache(arr.copy(), layer_caches, dense_input, prediction)


def _lstm_layer_backward(
    params: LstmLayerParams, caches: list[CellCache], dh_seq: np.ndarray
) -> tuple[LstmLayerParams, np.ndarray]:
    """Backpropagate a (T, units) hidden-state gradient through time.

    Returns the parameter gradients (same record shape as ``params``) and
    the (T, input_dim) gradient with respect to the layer's inputs.
    """
    steps = len(caches)
    units = params.u_rec.shape[1]
    dw = np.zeros_like(params.w)
    du = np.zeros_like(params.u_rec)
    db = np.zeros_like(params.b)
    dx_seq = np.empty((steps, params.w.shape[1]), dtype=np.float64)
    dh_carry = np.zeros(units, dtype=np.float64)
    dc_carry = np.zeros(units, dtype=np.float64)
    dz = np.empty(4 * units, dtype=np.float64)
    for t in range(steps - 1, -1, -1):
        cc = caches[t]
        dh = dh_seq[t] + dh_carry
        dc = dc_carry + dh * cc.o * (1.0 - cc.tanh_c * cc.tanh_c)
        dz[:units] = dc * cc.g * cc.i * (1.0 - cc.i)                 # input gate
        dz[units : 2 * units] = dc * cc.c_prev * cc.f * (1.0 - cc.f)  # forget gate
        dz[2 * units : 3 * units] = dc * cc.i * (1.0 - cc.g * cc.g)   # candidate
        dz[3 * units :] = dh * cc.tanh_c * cc.o * (1.0 - cc.o)        # output gate
        dw += np.outer(dz, cc.x)
        du += np.outer(dz, cc.h_prev)
        db += dz
        dx_seq[t] = params.w.T @ dz
        dh_carry = params.u_rec.T @ dz
        dc_carry = dc * cc.f
    return LstmLayerParams(dw, du, db), dx_seq


def _check_cache(model: Model, cache: ForwardCache) -> None:
    lstm_specs = [s for s in model.specs if s.kind is LayerKind.LSTM]
    ok = (
        cache.window.shape == (model.lookback,)
        and len(cache.layer_caches) == len(lstm_specs)
        and cache.dense_input.shape == (model.specs[-1].input_dim,)
    )
    if ok:
        for spec, caches in zip(lstm_specs, cache.layer_caches):
            if len(caches) != model.lookback or caches[0].x.shape != (spec.input_dim,) \
                    or caches[0].h_prev.shape != (spec.units,):
                ok = False
                break
    if not ok:
        raise StaleCache("forward cache does not match this model's shape")


def model_backward(model: Model, cache: ForwardCache, d_loss_d_pred: float) -> list[LayerParams]:
    """Exact reverse-mode gradients of the scalar loss w.r.t. every parameter.

    ``d_loss_d_pred`` is dL/d(prediction); gradients accumulate across the
    window's timesteps (backpropagation through time). The returned list
    mirrors ``model.params`` record for record.
    """
    _check_cache(model, cache)
    dense = model.params[-1]
    d_pred = float(d_loss_d_pred)
    dense_grads = DenseParams(
        w=d_pred * cache.dense_input[np.newaxis, :],
        b=np.array([d_pred], dtype=np.float64),
    )
    upstream = dense.w[0] * d_pred  # dL/dh for the last LSTM's final state

    grads: list[LayerParams] = [dense_grads]
    lstm_indices = [k for k, s in enumerate(model.specs) if s.kind is LayerKind.LSTM]
    for pos in reversed(range(len(lstm_indices))):
        spec = model.specs[lstm_indices[pos]]
        params = model.params[lstm_indices[pos]]
        caches = cache.layer_caches[pos]
        if spec.returns_sequence:
            dh_seq = upstream  # (T, units) gradient from the layer above
        else:
            dh_seq = np.zeros((len(caches), spec.units), dtype=np.float64)
            dh_seq[-1] = upstream
        layer_grads, dx_seq = _lstm_layer_backward(params, caches, dh_seq)
        grads.append(layer_grads)
        upstream = dx_seq
    grads.reverse()
    return grads


def numerical_gradients(
    model: Model, window, target: float, epsilon: float = 1e-5
) -> list[LayerParams]:
    """Central-difference gradients of L = (prediction - target)^2.

    Brute force: two forward passes per parameter. Used as the independent
    check on :func:`model_backward`, never in training.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    work = model.clone()
    grads: list[LayerParams] = []
    for params in work.params:
        grad_arrays = []
        for arr in params.arrays():
            grad = np.zeros_like(arr)
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for idx in range(flat.size):
                original = flat[idx]
                flat[idx] = original + epsilon
                hi = (work.predict(window) - target) ** 2
                flat[idx] = original - epsilon
                lo = (work.predict(window) - target) ** 2
                flat[idx] = original
                gflat[idx] = (hi - lo) / (2.0 * epsilon)
            grad_arrays.append(grad)
        if isinstance(params, LstmLayerParams):
            grads.append(LstmLayerParams(*grad_arrays))
        else:
            grads.append(DenseParams(*grad_arrays))
    return grads


# --- flat parameter vector helpers -----------------------------------------
# Canonical order: layer by layer; within an LSTM layer w, then u_rec, then
# b; within a dense layer w then b; row-major within each array. The same
# order is used by the optimizer and the model file.

def flatten_records(records) -> np.ndarray:
    return np.concatenate([a.ravel() for p in records for a in p.arrays()])


def flatten_params(model: Model) -> np.ndarray:
    return flatten_records(model.params)


def _array_shapes(spec: LayerSpec) -> tuple[tuple[int, ...], ...]:
    if spec.kind is LayerKind.LSTM:
        return (
            (4 * spec.units, spec.input_dim),
            (4 * spec.units, spec.units),
            (4 * spec.units,),
        )
    return ((spec.units, spec.input_dim), (spec.units,))


def unflatten_params(specs, flat: np.ndarray) -> list[LayerParams]:
    """Rebuild parameter records from a flat vector; the records' arrays are
    views into ``flat``, so updating ``flat`` in place updates them."""
    specs = tuple(specs)
    expected = sum(param_count(s) for s in specs)
    if flat.shape != (expected,):
        raise DimensionMismatch(f"flat vector has {flat.size} values, specs need {expected}")
    params: list[LayerParams] = []
    offset = 0
    for spec in specs:
        arrays = []
        for shape in _array_shapes(spec):
            size = int(np.prod(shape))
            arrays.append(flat[offset : offset + size].reshape(shape))
            offset += size
        if spec.kind is LayerKind.LSTM:
            params.append(LstmLayerParams(*arrays))
        else:
            params.append(DenseParams(*arrays))
    return params


def model_from_flat(template: Model, flat: np.ndarray) -> Model:
    """A model sharing ``template``'s metadata with parameters viewing ``flat``."""
    return Model(
        specs=template.specs,
        params=unflatten_params(template.specs, flat),
        scaler=template.scaler,
        lookback=template.lookback,
        seed=template.seed,
    )
