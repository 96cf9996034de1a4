"""Mini-batch SGD training with temporal validation holdout and early stopping.

The validation slice is the trailing ``validation_fraction`` of every training
clip's timeline (contiguous, so adjacent near-identical frames cannot leak
across the split). Training stops once validation loss has not improved by at
least 1e-6 for ``patience`` consecutive epochs, and the parameters from the
best validation epoch are returned.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import models, nn
from .dataio import ClipDataset, Modality
from .labeling import Dimension, quantize_values

IMPROVEMENT_THRESHOLD = 1e-6


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    weight_decay: float = 0.005
    temperature: float = 2.0
    epochs: int = 200
    batch_size: int = 128
    patience: int = 25
    sequence_length: int = 5
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        for name in ("learning_rate", "temperature", "epochs", "batch_size",
                     "patience", "sequence_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.patience > self.epochs:
            raise ValueError(f"patience {self.patience} > epochs {self.epochs}")
        if not 0 < self.validation_fraction < 1:
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )

    def sgd(self) -> nn.SgdConfig:
        return nn.SgdConfig(self.learning_rate, self.weight_decay)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in cls.__dataclass_fields__.values()}
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = "completed"

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epochs_run"] = self.epochs_run
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def make_batches(examples: Sequence, batch_size: int, rng: np.random.Generator) -> list:
    """Seeded shuffle, then contiguous chunks; the final partial batch is kept."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = len(examples)
    if n == 0:
        raise ValueError("cannot batch an empty example set")
    order = rng.permutation(n)
    if isinstance(examples, np.ndarray):
        return [examples[order[i : i + batch_size]] for i in range(0, n, batch_size)]
    return [
        [examples[j] for j in order[i : i + batch_size]]
        for i in range(0, n, batch_size)
    ]


def _split_index(n: int, validation_fraction: float) -> int:
    """Start of the validation tail; both sides stay nonempty."""
    split = int(round(n * (1.0 - validation_fraction)))
    return min(max(split, 1), n - 1)


@dataclass
class _ExampleSet:
    """Training clips flattened into global arrays plus train/val index sets."""

    features: dict[Modality, np.ndarray]
    labels: np.ndarray
    train_idx: np.ndarray  # FC: window index; LSTM: sequence-end window index
    val_idx: np.ndarray


def _collect_examples(
    clips: Sequence[ClipDataset],
    dimension: Dimension,
    params: models.FusionParams,
    config: TrainConfig,
) -> _ExampleSet:
    modalities = params.modalities
    features = {m: np.concatenate([c.features[m] for c in clips]) for m in modalities}
    labels = np.concatenate([quantize_values(c.labels(dimension)) for c in clips])

    is_lstm = params.architecture == "lstm"
    min_end = (config.sequence_length - 1) * models.SEQUENCE_STEP if is_lstm else 0
    train_parts, val_parts = [], []
    offset = 0
    for clip in clips:
        n = clip.n_windows
        split = _split_index(n, config.validation_fraction)
        idx = np.arange(min_end, n)
        if idx.size == 0:
            raise ValueError(
                f"clip {clip.clip_id!r} has {n} windows; too short for "
                f"sequence length {config.sequence_length} at step {models.SEQUENCE_STEP}"
            )
        train_parts.append(offset + idx[idx < split])
        val_parts.append(offset + idx[idx >= split])
        offset += n
    train_idx = np.concatenate(train_parts)
    val_idx = np.concatenate(val_parts)
    if train_idx.size == 0 or val_idx.size == 0:
        raise ValueError("training or validation slice is empty; clips too short")
    return _ExampleSet(features, labels, train_idx, val_idx)


def _batch_inputs(data: _ExampleSet, idx: np.ndarray, params, config):
    if params.architecture == "lstm":
        gather = models.lstm_gather_indices(idx, config.sequence_length)
        xs = {m: arr[gather] for m, arr in data.features.items()}
    else:
        xs = {m: arr[idx] for m, arr in data.features.items()}
    return xs, data.labels[idx]


def _loss_and_grads(params, xs, ys, temperature):
    if params.architecture == "lstm":
        return models.lstm_loss_and_grads(params, xs, ys, temperature)
    return models.fc_loss_and_grads(params, xs, ys, temperature)


def _evaluate(params, data: _ExampleSet, idx: np.ndarray, config, chunk=2048):
    """Mean loss and accuracy over an index set, in fixed order."""
    total_nll = 0.0
    correct = 0
    for start in range(0, idx.size, chunk):
        part = idx[start : start + chunk]
        xs, ys = _batch_inputs(data, part, params, config)
        if params.architecture == "lstm":
            probs = models.lstm_batch_probs(params, xs, config.temperature)
        else:
            probs = models.fc_batch_probs(params, xs, config.temperature)
        with np.errstate(divide="ignore"):  # p == 0 -> inf loss, intended
            total_nll += float(-np.log(probs[np.arange(len(ys)), ys]).sum())
        correct += int((np.argmax(probs, axis=-1) == ys).sum())
    return total_nll / idx.size, correct / idx.size


def train(
    params: models.FusionParams,
    train_clips: Sequence[ClipDataset],
    dimension: Dimension,
    config: TrainConfig,
) -> tuple[models.FusionParams, TrainReport]:
    """Run mini-batch SGD and return (best-validation-epoch params, report)."""
    if not train_clips:
        raise ValueError("no training clips")
    data = _collect_examples(train_clips, dimension, params, config)
    rng = np.random.default_rng(config.seed)
    sgd_config = config.sgd()

    report = TrainReport()
    best_val = np.inf
    best_params = params.copy()
    epochs_without_improvement = 0

    param_dict = dict(params.param_items())
    for epoch in range(1, config.epochs + 1):
        loss_sum = 0.0
        for batch_idx in make_batches(data.train_idx, config.batch_size, rng):
            xs, ys = _batch_inputs(data, batch_idx, params, config)
            try:
                loss, grads = _loss_and_grads(params, xs, ys, config.temperature)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite training loss at epoch {epoch} "
                        f"(lr={config.learning_rate}, batch={len(batch_idx)})"
                    )
                param_dict = nn.sgd_step(param_dict, grads, sgd_config)
                params = params.with_params(param_dict)
            except nn.ShapeError:
                raise
            except ValueError as exc:
                # finiteness validation tripping mid-run means the weights blew up
                raise TrainingDivergedError(
                    f"numeric blow-up at epoch {epoch}: {exc}"
                ) from exc
            loss_sum += loss * len(batch_idx)
        report.train_loss.append(loss_sum / data.train_idx.size)

        val_loss, val_acc = _evaluate(params, data, data.val_idx, config)
        report.val_loss.append(val_loss)
        report.val_accuracy.append(val_acc)

        if val_loss < best_val - IMPROVEMENT_THRESHOLD:
            best_val = val_loss
            best_params = params.copy()
            report.best_epoch = epoch
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= config.patience:
                report.stop_reason = "early-stopped"
                break
    else:
        report.stop_reason = "completed"

    return best_params, report
