"""The two fusion classifiers: per-modality projections feeding either a pair
of dense layers (fc) or a two-layer LSTM (lstm), ending in a 7-way
temperature softmax.

Parameter records are plain dataclasses over float64 arrays. ``param_items``
yields (name, array) pairs in the canonical order used by checkpoints and the
optimizer:

    proj_<modality>.{W,b}           present modalities in rgb, flow, audio order
    hidden1.{W,b} hidden2.{W,b}     fc variant
    layer<k>.{W_xf,W_hf,b_f,W_xi,W_hi,b_i,W_xc,W_hc,b_c,W_xo,W_ho,b_o}  lstm variant
    output.{W,b}

All forward helpers accept a single example or a batch (leading batch axis).
Backward passes are hand-derived; see tests for the finite-difference checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .dataio import ALL_MODALITIES, FeatureWindow, Modality
from .labeling import NUM_CLASSES, EmotionLabel
from .nn import (
    DenseLayerParams,
    ShapeError,
    as_f64,
    batch_cross_entropy,
    dense_forward,
    init_dense,
    relu,
    sigmoid,
    softmax_temperature,
    softmax_xent_grad,
)

PROJECTION_DIM = 128
HIDDEN_DIM = 64
SEQUENCE_LENGTH = 5
# LSTM steps are spaced 10 frames (400 ms) apart so 5 steps span 2 s;
# consecutive sequences advance by one frame so every frame gets a prediction.
SEQUENCE_STEP = 10

_GATES = ("f", "i", "c", "o")


def _canonical(modalities: Iterable[Modality]) -> tuple[Modality, ...]:
    chosen = set(modalities)
    if not chosen:
        raise ValueError("at least one modality is required")
    return tuple(m for m in ALL_MODALITIES if m in chosen)


@dataclass
class FcFusionParams:
    """Projection layers + two hidden layers + 7-unit output."""

    projections: dict[Modality, DenseLayerParams]
    hidden1: DenseLayerParams
    hidden2: DenseLayerParams
    output: DenseLayerParams

    architecture = "fc"

    @property
    def modalities(self) -> tuple[Modality, ...]:
        return _canonical(self.projections)

    def param_items(self) -> Iterator[tuple[str, np.ndarray]]:
        for m in self.modalities:
            layer = self.projections[m]
            yield f"proj_{m.key}.W", layer.weights
            yield f"proj_{m.key}.b", layer.bias
        for name, layer in (("hidden1", self.hidden1), ("hidden2", self.hidden2),
                            ("output", self.output)):
            yield f"{name}.W", layer.weights
            yield f"{name}.b", layer.bias

    def with_params(self, arrays: Mapping[str, np.ndarray]) -> "FcFusionParams":
        return FcFusionParams(
            projections={
                m: DenseLayerParams(arrays[f"proj_{m.key}.W"], arrays[f"proj_{m.key}.b"])
                for m in self.modalities
            },
            hidden1=DenseLayerParams(arrays["hidden1.W"], arrays["hidden1.b"]),
            hidden2=DenseLayerParams(arrays["hidden2.W"], arrays["hidden2.b"]),
            output=DenseLayerParams(arrays["output.W"], arrays["output.b"]),
        )

    def copy(self) -> "FcFusionParams":
        return self.with_params({k: v.copy() for k, v in self.param_items()})


@dataclass
class LstmCellParams:
    """Gate weights of one LSTM cell; W_x* are (hidden, input), W_h* (hidden, hidden)."""

    W_xf: np.ndarray
    W_hf: np.ndarray
    b_f: np.ndarray
    W_xi: np.ndarray
    W_hi: np.ndarray
    b_i: np.ndarray
    W_xc: np.ndarray
    W_hc: np.ndarray
    b_c: np.ndarray
    W_xo: np.ndarray
    W_ho: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        for name in self._names():
            setattr(self, name, as_f64(getattr(self, name)))
        h, d = self.W_xf.shape
        for g in _GATES:
            if getattr(self, f"W_x{g}").shape != (h, d):
                raise ShapeError(f"W_x{g} shape mismatch")
            if getattr(self, f"W_h{g}").shape != (h, h):
                raise ShapeError(f"W_h{g} must be (hidden, hidden)")
            if getattr(self, f"b_{g}").shape != (h,):
                raise ShapeError(f"b_{g} must have length {h}")

    @staticmethod
    def _names() -> tuple[str, ...]:
        return tuple(n for g in _GATES for n in (f"W_x{g}", f"W_h{g}", f"b_{g}"))

    @property
    def hidden_dim(self) -> int:
        return self.W_xf.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_xf.shape[1]

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for name in self._names():
            yield name, getattr(self, name)


@dataclass
class LstmState:
    """Cell and hidden state; h stays in [-1, 1] element-wise."""

    c: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.c = as_f64(self.c)
        self.h = as_f64(self.h)
        if self.c.shape != self.h.shape:
            raise ShapeError(f"c shape {self.c.shape} != h shape {self.h.shape}")

    @classmethod
    def zeros(cls, hidden_dim: int, batch: int | None = None) -> "LstmState":
        shape = (hidden_dim,) if batch is None else (batch, hidden_dim)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass
class LstmFusionParams:
    """Projection layers + two stacked LSTM cells + 7-unit output."""

    projections: dict[Modality, DenseLayerParams]
    layer1: LstmCellParams
    layer2: LstmCellParams
    output: DenseLayerParams

    architecture = "lstm"

    @property
    def modalities(self) -> tuple[Modality, ...]:
        return _canonical(self.projections)

    def param_items(self) -> Iterator[tuple[str, np.ndarray]]:
        for m in self.modalities:
            layer = self.projections[m]
            yield f"proj_{m.key}.W", layer.weights
            yield f"proj_{m.key}.b", layer.bias
        for prefix, cell in (("layer1", self.layer1), ("layer2", self.layer2)):
            for name, arr in cell.items():
                yield f"{prefix}.{name}", arr
        yield "output.W", self.output.weights
        yield "output.b", self.output.bias

    def with_params(self, arrays: Mapping[str, np.ndarray]) -> "LstmFusionParams":
        def cell(prefix: str) -> LstmCellParams:
            return LstmCellParams(**{n: arrays[f"{prefix}.{n}"] for n in LstmCellParams._names()})

        return LstmFusionParams(
            projections={
                m: DenseLayerParams(arrays[f"proj_{m.key}.W"], arrays[f"proj_{m.key}.b"])
                for m in self.modalities
            },
            layer1=cell("layer1"),
            layer2=cell("layer2"),
            output=DenseLayerParams(arrays["output.W"], arrays["output.b"]),
        )

    def copy(self) -> "LstmFusionParams":
        return self.with_params({k: v.copy() for k, v in self.param_items()})


FusionParams = FcFusionParams | LstmFusionParams


def _init_projections(rng, modalities, modality_dims, projection_dim):
    return {
        m: init_dense(rng, projection_dim, modality_dims[m])
        for m in _canonical(modalities)
    }


def init_fc_params(
    rng: np.random.Generator,
    modalities: Iterable[Modality] = ALL_MODALITIES,
    modality_dims: Mapping[Modality, int] | None = None,
    projection_dim: int = PROJECTION_DIM,
    hidden_dim: int = HIDDEN_DIM,
    n_classes: int = NUM_CLASSES,
) -> FcFusionParams:
    modality_dims = modality_dims or {m: m.dim for m in ALL_MODALITIES}
    projections = _init_projections(rng, modalities, modality_dims, projection_dim)
    fused_dim = projection_dim * len(projections)
    return FcFusionParams(
        projections=projections,
        hidden1=init_dense(rng, hidden_dim, fused_dim),
        hidden2=init_dense(rng, hidden_dim, hidden_dim),
        output=init_dense(rng, n_classes, hidden_dim),
    )


def _init_cell(rng, hidden_dim: int, input_dim: int) -> LstmCellParams:
    arrays = {}
    for g in _GATES:
        arrays[f"W_x{g}"] = init_dense(rng, hidden_dim, input_dim).weights
        arrays[f"W_h{g}"] = init_dense(rng, hidden_dim, hidden_dim).weights
        arrays[f"b_{g}"] = np.zeros(hidden_dim)
    return LstmCellParams(**arrays)


def init_lstm_params(
    rng: np.random.Generator,
    modalities: Iterable[Modality] = ALL_MODALITIES,
    modality_dims: Mapping[Modality, int] | None = None,
    projection_dim: int = PROJECTION_DIM,
    hidden_dim: int = HIDDEN_DIM,
    n_classes: int = NUM_CLASSES,
) -> LstmFusionParams:
    modality_dims = modality_dims or {m: m.dim for m in ALL_MODALITIES}
    projections = _init_projections(rng, modalities, modality_dims, projection_dim)
    fused_dim = projection_dim * len(projections)
    return LstmFusionParams(
        projections=projections,
        layer1=_init_cell(rng, hidden_dim, fused_dim),
        layer2=_init_cell(rng, hidden_dim, hidden_dim),
        output=init_dense(rng, n_classes, hidden_dim),
    )


# ---------------------------------------------------------------------------
# forward passes


def _window_inputs(window: FeatureWindow, params: FusionParams) -> dict[Modality, np.ndarray]:
    return {m: as_f64(window.vector(m)) for m in params.modalities}


def _fuse_batch(params: FusionParams, xs: Mapping[Modality, np.ndarray]):
    """Project + relu each modality, concatenate in canonical order.

    Returns (fused activations, per-modality pre-activation cache).
    """
    pre = {}
    acts = []
    for m in params.modalities:
        if m not in xs:
            raise ShapeError(f"missing {m.key} input")
        pre[m] = dense_forward(params.projections[m], xs[m])
        acts.append(relu(pre[m]))
    return np.concatenate(acts, axis=-1), pre


def fuse(window: FeatureWindow, params: FusionParams) -> np.ndarray:
    """Concatenated per-modality projections of one normalized window."""
    fused, _ = _fuse_batch(params, _window_inputs(window, params))
    return fused


def fc_batch_probs(
    params: FcFusionParams, xs: Mapping[Modality, np.ndarray], temperature: float
) -> np.ndarray:
    fused, _ = _fuse_batch(params, xs)
    a1 = relu(dense_forward(params.hidden1, fused))
    a2 = relu(dense_forward(params.hidden2, a1))
    return softmax_temperature(dense_forward(params.output, a2), temperature)


def fc_forward(window: FeatureWindow, params: FcFusionParams, temperature: float) -> np.ndarray:
    """Probability vector over the 7 classes for one normalized window."""
    return fc_batch_probs(params, _window_inputs(window, params), temperature)


def lstm_cell_step(params: LstmCellParams, x, prev: LstmState) -> tuple[LstmState, np.ndarray]:
    """One LSTM step: gates from sigmoid/tanh affine maps, then
    c = f*c_prev + i*g and h = o*tanh(c)."""
    x = as_f64(x)
    if x.shape[-1] != params.input_dim:
        raise ShapeError(f"input dim {x.shape[-1]} != cell input dim {params.input_dim}")
    if prev.h.shape[-1] != params.hidden_dim:
        raise ShapeError(f"state dim {prev.h.shape[-1]} != cell hidden dim {params.hidden_dim}")
    f = sigmoid(x @ params.W_xf.T + prev.h @ params.W_hf.T + params.b_f)
    i = sigmoid(x @ params.W_xi.T + prev.h @ params.W_hi.T + params.b_i)
    g = np.tanh(x @ params.W_xc.T + prev.h @ params.W_hc.T + params.b_c)
    c = f * prev.c + i * g
    o = sigmoid(x @ params.W_xo.T + prev.h @ params.W_ho.T + params.b_o)
    h = o * np.tanh(c)
    return LstmState(c, h), h


def _lstm_run(cell: LstmCellParams, x_seq: np.ndarray):
    """Run a cell over (batch, T, input); returns h_seq (batch, T, hidden) and
    the per-step caches needed for backprop."""
    batch, steps, _ = x_seq.shape
    state = LstmState.zeros(cell.hidden_dim, batch)
    h_seq = np.empty((batch, steps, cell.hidden_dim))
    caches = []
    for t in range(steps):
        x = x_seq[:, t]
        h_prev, c_prev = state.h, state.c
        f = sigmoid(x @ cell.W_xf.T + h_prev @ cell.W_hf.T + cell.b_f)
        i = sigmoid(x @ cell.W_xi.T + h_prev @ cell.W_hi.T + cell.b_i)
        g = np.tanh(x @ cell.W_xc.T + h_prev @ cell.W_hc.T + cell.b_c)
        c = f * c_prev + i * g
        o = sigmoid(x @ cell.W_xo.T + h_prev @ cell.W_ho.T + cell.b_o)
        tanh_c = np.tanh(c)
        h = o * tanh_c
        h_seq[:, t] = h
        caches.append((x, h_prev, c_prev, f, i, g, o, tanh_c))
        state = LstmState(c, h)
    return h_seq, caches


def _lstm_backprop(cell: LstmCellParams, caches, dh_seq: np.ndarray):
    """Backpropagation through time for one cell.

    dh_seq carries the external gradient arriving at each step's h output.
    Returns (dx_seq, gradients keyed by the cell's parameter names).
    """
    grads = {name: np.zeros_like(arr) for name, arr in cell.items()}
    steps = len(caches)
    dx_seq = np.empty((dh_seq.shape[0], steps, cell.input_dim))
    dh_carry = np.zeros_like(dh_seq[:, 0])
    dc_carry = np.zeros_like(dh_seq[:, 0])
    for t in reversed(range(steps)):
        x, h_prev, c_prev, f, i, g, o, tanh_c = caches[t]
        dh = dh_seq[:, t] + dh_carry
        dc = dh * o * (1.0 - tanh_c**2) + dc_carry
        dz = {
            "o": dh * tanh_c * o * (1.0 - o),
            "f": dc * c_prev * f * (1.0 - f),
            "i": dc * g * i * (1.0 - i),
            "c": dc * i * (1.0 - g**2),
        }
        dx = np.zeros_like(x)
        dh_carry = np.zeros_like(h_prev)
        for gate in _GATES:
            d = dz[gate]
            grads[f"W_x{gate}"] += d.T @ x
            grads[f"W_h{gate}"] += d.T @ h_prev
            grads[f"b_{gate}"] += d.sum(axis=0)
            dx += d @ getattr(cell, f"W_x{gate}")
            dh_carry += d @ getattr(cell, f"W_h{gate}")
        dx_seq[:, t] = dx
        dc_carry = dc * f
    return dx_seq, grads


def lstm_batch_probs(
    params: LstmFusionParams, xs_seq: Mapping[Modality, np.ndarray], temperature: float
) -> np.ndarray:
    """Probabilities for a batch of sequences; xs_seq maps modality -> (batch, T, dim)."""
    fused, _ = _fuse_seq(params, xs_seq)
    h1_seq, _ = _lstm_run(params.layer1, fused)
    h2_seq, _ = _lstm_run(params.layer2, h1_seq)
    logits = dense_forward(params.output, h2_seq[:, -1])
    return softmax_temperature(logits, temperature)


def _fuse_seq(params: LstmFusionParams, xs_seq: Mapping[Modality, np.ndarray]):
    pre = {}
    acts = []
    for m in params.modalities:
        if m not in xs_seq:
            raise ShapeError(f"missing {m.key} input")
        x = as_f64(xs_seq[m])
        pre[m] = dense_forward(params.projections[m], x)
        acts.append(relu(pre[m]))
    return np.concatenate(acts, axis=-1), pre


def lstm_forward(
    sequence: Sequence[FeatureWindow],
    params: LstmFusionParams,
    temperature: float,
    sequence_length: int = SEQUENCE_LENGTH,
) -> np.ndarray:
    """Probability vector for one sequence of normalized windows.

    Both LSTM layers start from zero state; the output layer reads the last
    step's hidden state of the second layer.
    """
    if len(sequence) != sequence_length:
        raise ShapeError(f"expected {sequence_length} windows, got {len(sequence)}")
    xs_seq = {
        m: np.stack([as_f64(w.vector(m)) for w in sequence])[None, :, :]
        for m in params.modalities
    }
    return lstm_batch_probs(params, xs_seq, temperature)[0]


def predict_class(probabilities, dimension=None) -> EmotionLabel:
    """Argmax class; ties break toward the lowest index."""
    p = as_f64(probabilities)
    if p.ndim != 1 or p.shape[0] != NUM_CLASSES:
        raise ShapeError(f"expected a {NUM_CLASSES}-class probability vector, got {p.shape}")
    return EmotionLabel(int(np.argmax(p)), dimension)


# ---------------------------------------------------------------------------
# losses and gradients


def fc_loss_and_grads(
    params: FcFusionParams,
    xs: Mapping[Modality, np.ndarray],
    targets: np.ndarray,
    temperature: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean temperature-softmax cross-entropy over a batch plus its gradients."""
    xs = {m: np.atleast_2d(as_f64(xs[m])) for m in params.modalities}
    targets = np.atleast_1d(targets)
    fused, pre = _fuse_batch(params, xs)
    z1 = dense_forward(params.hidden1, fused)
    a1 = relu(z1)
    z2 = dense_forward(params.hidden2, a1)
    a2 = relu(z2)
    probs = softmax_temperature(dense_forward(params.output, a2), temperature)
    loss = batch_cross_entropy(probs, targets)

    grads: dict[str, np.ndarray] = {}
    dlogits = softmax_xent_grad(probs, targets, temperature)
    grads["output.W"] = dlogits.T @ a2
    grads["output.b"] = dlogits.sum(axis=0)
    dz2 = (dlogits @ params.output.weights) * (z2 > 0)
    grads["hidden2.W"] = dz2.T @ a1
    grads["hidden2.b"] = dz2.sum(axis=0)
    dz1 = (dz2 @ params.hidden2.weights) * (z1 > 0)
    grads["hidden1.W"] = dz1.T @ fused
    grads["hidden1.b"] = dz1.sum(axis=0)
    dfused = dz1 @ params.hidden1.weights
    offset = 0
    for m in params.modalities:
        width = params.projections[m].out_dim
        dzm = dfused[:, offset : offset + width] * (pre[m] > 0)
        grads[f"proj_{m.key}.W"] = dzm.T @ xs[m]
        grads[f"proj_{m.key}.b"] = dzm.sum(axis=0)
        offset += width
    return loss, grads


def lstm_loss_and_grads(
    params: LstmFusionParams,
    xs_seq: Mapping[Modality, np.ndarray],
    targets: np.ndarray,
    temperature: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and gradients for a batch of sequences (backprop through time)."""
    xs_seq = {m: as_f64(xs_seq[m]) for m in params.modalities}
    targets = np.atleast_1d(targets)
    fused, pre = _fuse_seq(params, xs_seq)
    h1_seq, caches1 = _lstm_run(params.layer1, fused)
    h2_seq, caches2 = _lstm_run(params.layer2, h1_seq)
    h2_last = h2_seq[:, -1]
    probs = softmax_temperature(dense_forward(params.output, h2_last), temperature)
    loss = batch_cross_entropy(probs, targets)

    grads: dict[str, np.ndarray] = {}
    dlogits = softmax_xent_grad(probs, targets, temperature)
    grads["output.W"] = dlogits.T @ h2_last
    grads["output.b"] = dlogits.sum(axis=0)

    # only the final step of layer2 feeds the output layer
    dh2_seq = np.zeros_like(h2_seq)
    dh2_seq[:, -1] = dlogits @ params.output.weights
    dh1_seq, cell2_grads = _lstm_backprop(params.layer2, caches2, dh2_seq)
    dfused, cell1_grads = _lstm_backprop(params.layer1, caches1, dh1_seq)
    for name, arr in cell2_grads.items():
        grads[f"layer2.{name}"] = arr
    for name, arr in cell1_grads.items():
        grads[f"layer1.{name}"] = arr

    offset = 0
    batch, steps, _ = dfused.shape
    for m in params.modalities:
        width = params.projections[m].out_dim
        dzm = dfused[:, :, offset : offset + width] * (pre[m] > 0)
        flat_dz = dzm.reshape(batch * steps, width)
        flat_x = xs_seq[m].reshape(batch * steps, -1)
        grads[f"proj_{m.key}.W"] = flat_dz.T @ flat_x
        grads[f"proj_{m.key}.b"] = flat_dz.sum(axis=0)
        offset += width
    return loss, grads


# ---------------------------------------------------------------------------
# bulk prediction


def fc_predict_classes(
    params: FcFusionParams, features: Mapping[Modality, np.ndarray], temperature: float
) -> np.ndarray:
    probs = fc_batch_probs(params, {m: as_f64(features[m]) for m in params.modalities},
                           temperature)
    return np.argmax(probs, axis=-1)


def lstm_sequence_ends(n_windows: int, sequence_length: int = SEQUENCE_LENGTH,
                       step: int = SEQUENCE_STEP) -> np.ndarray:
    """Window indices that can terminate a full sequence."""
    first = (sequence_length - 1) * step
    return np.arange(first, n_windows)


def lstm_gather_indices(ends: np.ndarray, sequence_length: int = SEQUENCE_LENGTH,
                        step: int = SEQUENCE_STEP) -> np.ndarray:
    """(n_sequences, T) window indices for each sequence end."""
    offsets = np.arange(-(sequence_length - 1) * step, 1, step)
    return np.asarray(ends)[:, None] + offsets[None, :]


def lstm_predict_classes(
    params: LstmFusionParams,
    features: Mapping[Modality, np.ndarray],
    temperature: float,
    sequence_length: int = SEQUENCE_LENGTH,
    step: int = SEQUENCE_STEP,
    chunk: int = 512,
) -> tuple[np.ndarray, np.ndarray]:
    """Predict at every window that terminates a full sequence.

    Returns (window indices, predicted classes); the first
    (sequence_length - 1) * step windows have no prediction.
    """
    n = next(iter(features.values())).shape[0]
    ends = lstm_sequence_ends(n, sequence_length, step)
    if ends.size == 0:
        return ends, np.empty(0, dtype=np.int64)
    gather = lstm_gather_indices(ends, sequence_length, step)
    classes = np.empty(ends.shape[0], dtype=np.int64)
    for start in range(0, ends.shape[0], chunk):
        sl = slice(start, start + chunk)
        xs_seq = {m: as_f64(features[m][gather[sl]]) for m in params.modalities}
        probs = lstm_batch_probs(params, xs_seq, temperature)
        classes[sl] = np.argmax(probs, axis=-1)
    return ends, classes


# ---------------------------------------------------------------------------
# checkpoints

_CHECKPOINT_FORMAT = "affectfusion-checkpoint"


def save_checkpoint(path, params: FusionParams, meta: dict | None = None,
                    extra_arrays: Mapping[str, np.ndarray] | None = None) -> None:
    """JSON header line + float64 little-endian payloads in canonical order."""
    items = list(params.param_items())
    extras = list((extra_arrays or {}).items())
    header = {
        "format": _CHECKPOINT_FORMAT,
        "version": 1,
        "architecture": params.architecture,
        "modalities": [m.key for m in params.modalities],
        "params": [{"name": k, "shape": list(v.shape)} for k, v in items],
        "extra_arrays": [{"name": k, "shape": list(np.shape(v))} for k, v in extras],
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for _, arr in items + extras:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (params, meta, extra_arrays); rejects foreign or corrupt files."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a checkpoint file") from exc
        if header.get("format") != _CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a checkpoint file")
        payload = fh.read()

    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in header["params"] + header["extra_arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        end = offset + size * 8
        if end > len(payload):
            raise ValueError(f"{path}: truncated checkpoint payload")
        arrays[entry["name"]] = (
            np.frombuffer(payload[offset:end], dtype="<f8").reshape(entry["shape"]).copy()
        )
        offset = end
    if offset != len(payload):
        raise ValueError(f"{path}: checkpoint payload has trailing bytes")

    modalities = [Modality.from_key(k) for k in header["modalities"]]
    param_names = {e["name"] for e in header["params"]}
    param_arrays = {k: v for k, v in arrays.items() if k in param_names}
    extras = {k: v for k, v in arrays.items() if k not in param_names}
    if header["architecture"] == "fc":
        template = FcFusionParams(
            projections={m: None for m in modalities}, hidden1=None, hidden2=None, output=None
        )
    elif header["architecture"] == "lstm":
        template = LstmFusionParams(
            projections={m: None for m in modalities}, layer1=None, layer2=None, output=None
        )
    else:
        raise ValueError(f"{path}: unknown architecture {header['architecture']!r}")
    params = template.with_params(param_arrays)
    return params, header["meta"], extras
