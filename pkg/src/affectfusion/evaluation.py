"""Leave-one-out cross-validation over clips and the five reported metrics.

Discrete case: classification accuracy and accuracy±1 (a prediction adjacent
to the true class also counts). Continuous case: MAE, MSE, and Pearson
correlation between the reconstructed curve and the raw annotations. Folds
aggregate by unweighted mean over clips.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import models
from .dataio import (
    ALL_MODALITIES,
    ClipDataset,
    Modality,
    apply_minmax_clip,
    fit_minmax,
    load_dataset,
)
from .labeling import Dimension, ReconstructionConfig, quantize_values, reconstruct_continuous
from .training import TrainConfig, TrainingDivergedError, train


def _check_curves(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"curve shapes differ: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("curves must be nonempty")
    return pred, truth


def accuracy(pred, truth) -> float:
    """Fraction of exact class matches."""
    pred, truth = _check_curves(pred, truth)
    return float(np.mean(pred == truth))


def accuracy_pm1(pred, truth) -> float:
    """Fraction of predictions within one class of the truth."""
    pred, truth = _check_curves(pred, truth)
    return float(np.mean(np.abs(pred - truth) <= 1))


def mae_mse(pred_curve, truth_curve) -> tuple[float, float]:
    pred, truth = _check_curves(pred_curve, truth_curve)
    if not (np.isfinite(pred).all() and np.isfinite(truth).all()):
        raise ValueError("curves must be finite")
    delta = pred - truth
    return float(np.abs(delta).mean()), float((delta**2).mean())


def pearson(pred_curve, truth_curve) -> float:
    """Sample Pearson correlation; 0 by convention when either curve is constant."""
    pred, truth = _check_curves(pred_curve, truth_curve)
    if pred.size < 2:
        raise ValueError("pearson needs at least 2 samples")
    dx = pred - pred.mean()
    dy = truth - truth.mean()
    denom_sq = float(dx @ dx) * float(dy @ dy)
    if denom_sq == 0.0:
        return 0.0
    return float(dx @ dy) / np.sqrt(denom_sq)


@dataclass
class FoldResult:
    test_clip_id: str
    accuracy: float | None = None
    accuracy_pm1: float | None = None
    mae: float | None = None
    mse: float | None = None
    pearson: float | None = None
    pearson_zero_variance: bool = False
    n_eval_windows: int = 0
    stats_clip_ids: tuple[str, ...] = ()
    error: str | None = None
    # per-window curves for CSV emission; dropped from the JSON report
    curves: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def completed(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "test_clip_id": self.test_clip_id,
            "accuracy": self.accuracy,
            "accuracy_pm1": self.accuracy_pm1,
            "mae": self.mae,
            "mse": self.mse,
            "pearson": self.pearson,
            "pearson_zero_variance": self.pearson_zero_variance,
            "n_eval_windows": self.n_eval_windows,
            "stats_clip_ids": list(self.stats_clip_ids),
            "error": self.error,
        }


METRIC_NAMES = ("accuracy", "accuracy_pm1", "mae", "mse", "pearson")


@dataclass
class EvalReport:
    model: str
    dimension: str
    modalities: tuple[str, ...]
    folds: list[FoldResult]
    partial: bool
    train_config: dict
    recon_config: dict

    @property
    def aggregate(self) -> dict[str, float]:
        done = [f for f in self.folds if f.completed]
        if not done:
            return {}
        return {
            name: float(np.mean([getattr(f, name) for f in done])) for name in METRIC_NAMES
        }

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dimension": self.dimension,
            "modalities": list(self.modalities),
            "partial": self.partial,
            "n_folds": len(self.folds),
            "aggregate": self.aggregate,
            "folds": [f.to_dict() for f in self.folds],
            "train_config": self.train_config,
            "recon_config": self.recon_config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fold_seeds(base_seed: int) -> tuple[np.random.Generator, int]:
    """Init RNG and shuffle seed derived from the run seed.

    Every fold uses the same derivation, so folds over identical training data
    train identically (two copies of one clip yield two identical folds).
    """
    init_ss, shuffle_ss = np.random.SeedSequence(base_seed).spawn(2)
    shuffle_seed = int(shuffle_ss.generate_state(1, dtype=np.uint32)[0])
    return np.random.default_rng(init_ss), shuffle_seed


def _init_params(model: str, rng, modalities, clips):
    dims = {m: clips[0].features[m].shape[1] for m in modalities}
    if model == "fc":
        return models.init_fc_params(rng, modalities, dims)
    if model == "lstm":
        return models.init_lstm_params(rng, modalities, dims)
    raise ValueError(f"unknown model variant {model!r} (valid: fc, lstm)")


def run_fold(
    clips: Sequence[ClipDataset],
    fold_index: int,
    model: str,
    dimension: Dimension,
    train_config: TrainConfig,
    recon_config: ReconstructionConfig,
    modalities: Sequence[Modality],
) -> FoldResult:
    """Train on all clips but one and evaluate on the held-out clip."""
    test_clip = clips[fold_index]
    train_clips = [c for i, c in enumerate(clips) if i != fold_index]

    stats = fit_minmax(train_clips, modalities)
    if test_clip.clip_id in stats.source_clip_ids:
        raise AssertionError("normalization stats must exclude the test clip")

    init_rng, shuffle_seed = _fold_seeds(train_config.seed)
    params = _init_params(model, init_rng, modalities, clips)
    fold_config = dataclasses.replace(train_config, seed=shuffle_seed)

    result = FoldResult(test_clip_id=test_clip.clip_id, stats_clip_ids=stats.source_clip_ids)
    try:
        norm_train = [apply_minmax_clip(c, stats) for c in train_clips]
        params, _ = train(params, norm_train, dimension, fold_config)
        del norm_train
        norm_test = apply_minmax_clip(test_clip, stats)

        if model == "lstm":
            eval_idx, pred_classes = models.lstm_predict_classes(
                params, norm_test.features, train_config.temperature,
                train_config.sequence_length,
            )
            if eval_idx.size == 0:
                raise ValueError(
                    f"test clip {test_clip.clip_id!r} too short for any LSTM sequence"
                )
        else:
            pred_classes = models.fc_predict_classes(
                params, norm_test.features, train_config.temperature
            )
            eval_idx = np.arange(test_clip.n_windows)

        truth_values = test_clip.labels(dimension)[eval_idx]
        truth_classes = quantize_values(truth_values)
        result.accuracy = accuracy(pred_classes, truth_classes)
        result.accuracy_pm1 = accuracy_pm1(pred_classes, truth_classes)

        pred_curve = reconstruct_continuous(pred_classes, recon_config)
        result.mae, result.mse = mae_mse(pred_curve, truth_values)
        result.pearson = pearson(pred_curve, truth_values)
        result.pearson_zero_variance = bool(
            result.pearson == 0.0
            and (np.ptp(pred_curve) == 0.0 or np.ptp(truth_values) == 0.0)
        )
        result.n_eval_windows = int(eval_idx.size)
        result.curves = {
            "frame": test_clip.frame_indices[eval_idx],
            "truth_value": truth_values,
            "truth_class": truth_classes,
            "predicted_class": pred_classes,
            "predicted_value": pred_curve,
        }
    except TrainingDivergedError as exc:
        result.error = str(exc)
    return result


_WORKER_DATASETS: dict[str, list[ClipDataset]] = {}


def _parallel_fold(args):
    (manifest_path, fold_index, model, dim_value, train_cfg, recon_cfg, modality_keys) = args
    if manifest_path not in _WORKER_DATASETS:
        _WORKER_DATASETS[manifest_path] = _sorted_clips(load_dataset(manifest_path))
    clips = _WORKER_DATASETS[manifest_path]
    return run_fold(
        clips,
        fold_index,
        model,
        Dimension(dim_value),
        TrainConfig(**train_cfg),
        ReconstructionConfig(**recon_cfg),
        [Modality.from_key(k) for k in modality_keys],
    )


def _sorted_clips(clips: Sequence[ClipDataset]) -> list[ClipDataset]:
    return sorted(clips, key=lambda c: c.clip_id)


def run_loocv(
    dataset,
    model: str,
    dimension: Dimension,
    train_config: TrainConfig | None = None,
    recon_config: ReconstructionConfig | None = None,
    modalities: Sequence[Modality] = ALL_MODALITIES,
    parallel_folds: int = 1,
) -> EvalReport:
    """Leave-one-out cross-validation; each clip is the test set exactly once.

    ``dataset`` is a manifest path or a preloaded clip list. Folds run in
    clip-id order; per-fold normalization stats and training see only the
    other clips. A fold whose training diverges is reported with its error
    and excluded from the aggregate (report flagged partial).
    """
    train_config = train_config or TrainConfig()
    recon_config = recon_config or ReconstructionConfig()
    modalities = tuple(m for m in ALL_MODALITIES if m in set(modalities))
    if not modalities:
        raise ValueError("modality subset must be nonempty")

    manifest_path = None
    if isinstance(dataset, (str, Path)):
        manifest_path = str(dataset)
        clips = _sorted_clips(load_dataset(dataset))
    else:
        clips = _sorted_clips(dataset)
    if len(clips) < 2:
        raise ValueError(f"leave-one-out needs >= 2 clips, got {len(clips)}")

    if parallel_folds > 1 and manifest_path is not None:
        jobs = [
            (manifest_path, i, model, dimension.value, dataclasses.asdict(train_config),
             dataclasses.asdict(recon_config), [m.key for m in modalities])
            for i in range(len(clips))
        ]
        with ProcessPoolExecutor(max_workers=parallel_folds) as pool:
            folds = list(pool.map(_parallel_fold, jobs))
    else:
        folds = [
            run_fold(clips, i, model, dimension, train_config, recon_config, modalities)
            for i in range(len(clips))
        ]

    tested = [f.test_clip_id for f in folds]
    if sorted(tested) != sorted(c.clip_id for c in clips):
        raise AssertionError("every clip must be tested exactly once")

    return EvalReport(
        model=model,
        dimension=dimension.value,
        modalities=tuple(m.key for m in modalities),
        folds=folds,
        partial=any(not f.completed for f in folds),
        train_config=dataclasses.asdict(train_config),
        recon_config=dataclasses.asdict(recon_config),
    )


def write_curves_csv(path, fold: FoldResult) -> None:
    cols = ("frame", "truth_value", "truth_class", "predicted_class", "predicted_value")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*(fold.curves[c] for c in cols)):
            frame, tv, tc, pc, pv = row
            fh.write(f"{int(frame)},{float(tv)!r},{int(tc)},{int(pc)},{float(pv)!r}\n")


# ---------------------------------------------------------------------------
# text table in the benchmark's row/column layout

_SECTION_LABELS = {"fc": "Model with FC layers", "lstm": "Model with LSTM"}
_SINGLE_LABELS = {"rgb": "RGB frame", "flow": "Optical Flow (OF)", "audio": "Audio"}
_COMBO_LABELS = {"rgb": "RGB frame", "flow": "OF", "audio": "Audio"}


def modality_row_label(modality_keys: Sequence[str]) -> str:
    keys = [m.key for m in ALL_MODALITIES if m.key in set(modality_keys)]
    if len(keys) == 1:
        return _SINGLE_LABELS[keys[0]]
    return " + ".join(_COMBO_LABELS[k] for k in keys)


def _row_sort_key(modality_keys: Sequence[str]):
    keys = set(modality_keys)
    presence = tuple(int(m.key in keys) for m in ALL_MODALITIES)
    return (len(keys), tuple(-p for p in presence))


def format_results_table(title: str, reports: Sequence[EvalReport]) -> str:
    """Rows grouped into FC and LSTM sections, one row per modality subset.

    Columns: Discrete case (Accuracy %, Accuracy ±1 %) then Continuous case
    (MAE, MSE, Correlation).
    """
    widths = (13, 15, 7, 7, 11)
    label_width = max(
        [len(modality_row_label(r.modalities)) + 2 for r in reports]
        + [len(s) for s in _SECTION_LABELS.values()]
        + [24]
    )
    discrete_span = widths[0] + 3 + widths[1]
    continuous_span = widths[2] + 3 + widths[3] + 3 + widths[4]
    lines = [title]
    lines.append(
        f"{'':<{label_width}} | {'Discrete case':^{discrete_span}} "
        f"| {'Continuous case':^{continuous_span}}"
    )
    headers = ("Accuracy (%)", "Accuracy ±1 (%)", "MAE", "MSE", "Correlation")
    header_cells = " | ".join(f"{h:>{w}}" for h, w in zip(headers, widths))
    lines.append(f"{'':<{label_width}} | {header_cells}")
    rule = "-" * len(lines[-1])
    lines.append(rule)
    for variant in ("fc", "lstm"):
        section = [r for r in reports if r.model == variant]
        if not section:
            continue
        lines.append(_SECTION_LABELS[variant])
        section.sort(key=lambda r: _row_sort_key(r.modalities))
        for r in section:
            agg = r.aggregate
            label = "  " + modality_row_label(r.modalities)
            if not agg:
                lines.append(f"{label:<{label_width}} | (all folds failed)")
                continue
            values = (
                100 * agg["accuracy"], 100 * agg["accuracy_pm1"],
                agg["mae"], agg["mse"], agg["pearson"],
            )
            cells = " | ".join(f"{v:>{w}.2f}" for v, w in zip(values, widths))
            flag = " *" if r.partial else ""
            lines.append(f"{label:<{label_width}} | {cells}{flag}")
    lines.append(rule)
    if any(r.partial for r in reports):
        lines.append("* aggregate over completed folds only (some folds failed)")
    return "\n".join(lines) + "\n"


# Published reference results on the extended COGNIMUSE benchmark
# (experienced emotion, leave-one-out over the 12 clips), for side-by-side
# comparison in the report command. Tuples: (accuracy %, accuracy±1 %, MAE,
# MSE, correlation).
REFERENCE_RESULTS = {
    "arousal": {
        ("fc", ("rgb",)): (49.04, 92.84, 0.17, 0.05, 0.31),
        ("fc", ("flow",)): (51.08, 93.90, 0.18, 0.05, 0.34),
        ("fc", ("audio",)): (51.10, 95.67, 0.15, 0.04, 0.44),
        ("fc", ("rgb", "flow", "audio")): (53.32, 94.75, 0.15, 0.04, 0.46),
        ("lstm", ("rgb", "flow", "audio")): (48.64, 95.28, 0.37, 0.17, 0.43),
    },
    "valence": {
        ("fc", ("rgb",)): (38.60, 90.24, 0.20, 0.06, 0.05),
        ("fc", ("flow",)): (42.35, 90.12, 0.19, 0.06, 0.15),
        ("fc", ("audio",)): (42.53, 89.01, 0.19, 0.06, 0.15),
        ("fc", ("rgb", "flow", "audio")): (43.10, 90.51, 0.19, 0.06, 0.18),
        ("lstm", ("rgb", "flow", "audio")): (37.20, 89.22, 0.22, 0.07, 0.05),
    },
}


def format_reference_table(dimension: str) -> str:
    rows = REFERENCE_RESULTS.get(dimension, {})
    lines = [f"Reference results (extended COGNIMUSE, experienced {dimension}):"]
    for (variant, mods), values in rows.items():
        acc, pm1, mae, mse, corr = values
        label = f"{_SECTION_LABELS[variant]}: {modality_row_label(mods)}"
        lines.append(
            f"  {label:<42} {acc:>6.2f}  {pm1:>6.2f}  {mae:>5.2f}  {mse:>5.2f}  {corr:>5.2f}"
        )
    return "\n".join(lines) + "\n"
