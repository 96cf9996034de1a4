"""Command-line entry point: synth, train, eval, loocv, report.

Run configuration is a JSON document; command-line flags override config
values. All defaults equal the published training setup, so an empty config
reproduces it. Relative paths inside a config resolve against the config
file's directory. Exit codes: 0 success, 1 validation error, 2 runtime
failure. Timestamps are confined to the run_meta.json sidecar so every other
output is byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import evaluation, models, training
from .dataio import ALL_MODALITIES, Modality, apply_minmax_clip, fit_minmax, load_dataset
from .labeling import Dimension, ReconstructionConfig, quantize_values, reconstruct_continuous
from .synthdata import SynthSpec, generate
from .training import TrainConfig


class ValidationFailure(ValueError):
    """Carries the full list of configuration problems."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclasses.dataclass
class RunConfig:
    manifest: Path
    output_dir: Path
    model: str = "fc"
    dimension: Dimension = Dimension.VALENCE
    modalities: tuple[Modality, ...] = ALL_MODALITIES
    training: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    reconstruction: ReconstructionConfig = dataclasses.field(default_factory=ReconstructionConfig)
    train_clips: tuple[str, ...] = ()
    test_clips: tuple[str, ...] = ()
    checkpoint: Path | None = None
    parallel_folds: int = 1

    def tag(self) -> str:
        return f"{self.model}_{self.dimension.value}_" + "-".join(
            m.key for m in self.modalities
        )


def _parse_modalities(value, errors: list[str]) -> tuple[Modality, ...]:
    keys = value.split(",") if isinstance(value, str) else list(value)
    chosen = []
    for key in keys:
        key = key.strip()
        try:
            chosen.append(Modality.from_key(key))
        except ValueError as exc:
            errors.append(str(exc))
    if not chosen:
        errors.append("modality subset must be nonempty")
    return tuple(m for m in ALL_MODALITIES if m in set(chosen))


def load_run_config(args) -> RunConfig:
    """Merge the JSON config (if any) with CLI overrides; collect every error."""
    errors: list[str] = []
    raw: dict = {}
    base = Path.cwd()
    if getattr(args, "config", None):
        config_path = Path(args.config)
        if not config_path.is_file():
            raise ValidationFailure([f"config file not found: {config_path}"])
        base = config_path.parent
        try:
            raw = json.loads(config_path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationFailure([f"config is not valid JSON: {exc}"]) from exc
        known = {f.name for f in dataclasses.fields(RunConfig)}
        for key in sorted(set(raw) - known):
            errors.append(f"unknown config key: {key!r}")

    def pick(name, default=None):
        override = getattr(args, name, None)
        return override if override is not None else raw.get(name, default)

    def pick_path(name, default=None):
        # flag paths resolve against the cwd, config paths against the config dir
        override = getattr(args, name, None)
        if override is not None:
            return Path(override).absolute()
        value = raw.get(name, default)
        if value is None:
            return None
        return Path(value) if Path(value).is_absolute() else base / value

    manifest_path = pick_path("manifest")
    if manifest_path is None:
        errors.append("a dataset manifest is required (config 'manifest' or --manifest)")
        manifest_path = Path(".")
    elif not manifest_path.is_file():
        errors.append(f"manifest not found: {manifest_path}")

    output_dir = pick_path("output_dir", "out")

    model = pick("model", "fc")
    if model not in ("fc", "lstm"):
        errors.append(f"model must be 'fc' or 'lstm', got {model!r}")

    dim_raw = pick("dimension", "valence")
    dimension = Dimension.VALENCE
    try:
        dimension = Dimension(dim_raw)
    except ValueError:
        errors.append(f"dimension must be 'valence' or 'arousal', got {dim_raw!r}")

    modalities = _parse_modalities(pick("modalities", ["rgb", "flow", "audio"]), errors)

    train_kwargs = dict(raw.get("training", {}))
    if getattr(args, "seed", None) is not None:
        train_kwargs["seed"] = args.seed
    try:
        train_config = TrainConfig.from_dict(train_kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"training config: {exc}")
        train_config = TrainConfig()

    try:
        recon_config = ReconstructionConfig(**raw.get("reconstruction", {}))
    except (TypeError, ValueError) as exc:
        errors.append(f"reconstruction config: {exc}")
        recon_config = ReconstructionConfig()

    checkpoint_path = pick_path("checkpoint")

    parallel = pick("parallel_folds", 1)
    if int(parallel) < 1:
        errors.append(f"parallel_folds must be >= 1, got {parallel}")

    if errors:
        raise ValidationFailure(errors)
    return RunConfig(
        manifest=manifest_path,
        output_dir=output_dir,
        model=model,
        dimension=dimension,
        modalities=modalities,
        training=train_config,
        reconstruction=recon_config,
        train_clips=tuple(raw.get("train_clips", ())),
        test_clips=tuple(raw.get("test_clips", ())),
        checkpoint=checkpoint_path,
        parallel_folds=int(parallel),
    )


def _write_run_meta(out_dir: Path, command: str) -> None:
    meta = {"command": command, "created_unix": time.time()}
    with open(out_dir / "run_meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def _select_clips(clips, wanted_ids, what: str):
    by_id = {c.clip_id: c for c in clips}
    missing = [cid for cid in wanted_ids if cid not in by_id]
    if missing:
        raise ValidationFailure(
            [f"{what} clip id {cid!r} not in manifest (have: {sorted(by_id)})" for cid in missing]
        )
    return [by_id[cid] for cid in wanted_ids]


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec(
            clips=args.clips,
            frames_per_clip=args.frames,
            seed=args.seed if args.seed is not None else 0,
            separability=args.separability,
            drift_period=args.drift_period,
        )
    except ValueError as exc:
        raise ValidationFailure([str(exc)]) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = generate(spec, out)
    print(manifest)
    return 0


def cmd_loocv(args) -> int:
    cfg = load_run_config(args)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report = evaluation.run_loocv(
        cfg.manifest,
        cfg.model,
        cfg.dimension,
        cfg.training,
        cfg.reconstruction,
        cfg.modalities,
        parallel_folds=cfg.parallel_folds,
    )
    tag = cfg.tag()
    report_path = cfg.output_dir / f"report_{tag}.json"
    report_path.write_text(report.to_json())
    table = evaluation.format_results_table(
        f"Leave-one-out cross-validation: {cfg.dimension.value}", [report]
    )
    (cfg.output_dir / f"table_{tag}.txt").write_text(table)
    curves_dir = cfg.output_dir / f"curves_{tag}"
    curves_dir.mkdir(exist_ok=True)
    for fold in report.folds:
        if fold.completed:
            evaluation.write_curves_csv(curves_dir / f"{fold.test_clip_id}.csv", fold)
    _write_run_meta(cfg.output_dir, "loocv")
    print(report_path)
    sys.stdout.write(table)
    return 0


def cmd_train(args) -> int:
    cfg = load_run_config(args)
    if not cfg.train_clips:
        raise ValidationFailure(["cmd_train needs config 'train_clips': a list of clip ids"])
    clips = load_dataset(cfg.manifest)
    train_clips = _select_clips(clips, cfg.train_clips, "train")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    stats = fit_minmax(train_clips, cfg.modalities)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.training.seed))
    dims = {m: train_clips[0].features[m].shape[1] for m in cfg.modalities}
    if cfg.model == "fc":
        params = models.init_fc_params(rng, cfg.modalities, dims)
    else:
        params = models.init_lstm_params(rng, cfg.modalities, dims)

    normalized = [apply_minmax_clip(c, stats) for c in train_clips]
    params, report = training.train(params, normalized, cfg.dimension, cfg.training)

    checkpoint_path = cfg.checkpoint or cfg.output_dir / f"checkpoint_{cfg.tag()}.ckpt"
    extras = {}
    for m in cfg.modalities:
        extras[f"stats.{m.key}.min"] = stats.mins[m]
        extras[f"stats.{m.key}.max"] = stats.maxs[m]
    meta = {
        "dimension": cfg.dimension.value,
        "seed": cfg.training.seed,
        "training": dataclasses.asdict(cfg.training),
        "train_clips": list(cfg.train_clips),
    }
    models.save_checkpoint(checkpoint_path, params, meta, extras)
    (cfg.output_dir / f"train_report_{cfg.tag()}.json").write_text(report.to_json() + "\n")
    _write_run_meta(cfg.output_dir, "train")
    print(checkpoint_path)
    return 0


def cmd_eval(args) -> int:
    cfg = load_run_config(args)
    if not cfg.test_clips:
        raise ValidationFailure(["cmd_eval needs config 'test_clips': a list of clip ids"])
    if cfg.checkpoint is None:
        raise ValidationFailure(["cmd_eval needs config 'checkpoint'"])
    if not cfg.checkpoint.is_file():
        raise ValidationFailure([f"checkpoint not found: {cfg.checkpoint}"])

    params, meta, extras = models.load_checkpoint(cfg.checkpoint)
    if params.architecture != cfg.model:
        raise ValidationFailure(
            [f"checkpoint architecture {params.architecture!r} != configured {cfg.model!r}"]
        )
    if meta.get("dimension") != cfg.dimension.value:
        raise ValidationFailure(
            [f"checkpoint dimension {meta.get('dimension')!r} != configured "
             f"{cfg.dimension.value!r}"]
        )

    clips = load_dataset(cfg.manifest)
    test_clips = _select_clips(clips, cfg.test_clips, "test")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    from .dataio import NormalizationStats

    stats = NormalizationStats(
        mins={m: extras[f"stats.{m.key}.min"] for m in params.modalities},
        maxs={m: extras[f"stats.{m.key}.max"] for m in params.modalities},
    )
    results = {}
    for clip in test_clips:
        norm = apply_minmax_clip(clip, stats)
        if cfg.model == "lstm":
            idx, pred = models.lstm_predict_classes(
                params, norm.features, cfg.training.temperature, cfg.training.sequence_length
            )
        else:
            pred = models.fc_predict_classes(params, norm.features, cfg.training.temperature)
            idx = np.arange(clip.n_windows)
        truth_values = clip.labels(cfg.dimension)[idx]
        truth_classes = quantize_values(truth_values)
        curve = reconstruct_continuous(pred, cfg.reconstruction)
        mae, mse = evaluation.mae_mse(curve, truth_values)
        results[clip.clip_id] = {
            "accuracy": evaluation.accuracy(pred, truth_classes),
            "accuracy_pm1": evaluation.accuracy_pm1(pred, truth_classes),
            "mae": mae,
            "mse": mse,
            "pearson": evaluation.pearson(curve, truth_values),
            "n_eval_windows": int(idx.size),
        }
    out_path = cfg.output_dir / f"eval_{cfg.tag()}.json"
    out_path.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    _write_run_meta(cfg.output_dir, "eval")
    print(out_path)
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        path = Path(path)
        if not path.is_file():
            raise ValidationFailure([f"report not found: {path}"])
        data = json.loads(path.read_text())
        folds = [
            evaluation.FoldResult(
                test_clip_id=f["test_clip_id"],
                accuracy=f["accuracy"],
                accuracy_pm1=f["accuracy_pm1"],
                mae=f["mae"],
                mse=f["mse"],
                pearson=f["pearson"],
                error=f.get("error"),
            )
            for f in data["folds"]
        ]
        reports.append(
            evaluation.EvalReport(
                model=data["model"],
                dimension=data["dimension"],
                modalities=tuple(data["modalities"]),
                folds=folds,
                partial=data["partial"],
                train_config=data.get("train_config", {}),
                recon_config=data.get("recon_config", {}),
            )
        )
    dimensions = sorted({r.dimension for r in reports})
    chunks = []
    for dim in dimensions:
        subset = [r for r in reports if r.dimension == dim]
        chunks.append(
            evaluation.format_results_table(f"Leave-one-out cross-validation: {dim}", subset)
        )
        if args.reference:
            chunks.append(evaluation.format_reference_table(dim))
    text = "\n".join(chunks)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affectfusion",
        description="Train and evaluate multimodal valence/arousal classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--clips", type=int, default=12)
    p_synth.add_argument("--frames", type=int, default=2000)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--separability", type=float, default=1.0)
    p_synth.add_argument("--drift-period", type=int, default=500)
    p_synth.set_defaults(func=cmd_synth)

    def add_common(p):
        p.add_argument("--config", help="run config JSON")
        p.add_argument("--manifest", help="dataset manifest path")
        p.add_argument("--out", dest="output_dir", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--model", choices=("fc", "lstm"), default=None)
        p.add_argument("--dimension", choices=("valence", "arousal"), default=None)
        p.add_argument("--modalities", default=None,
                       help="comma-separated subset of rgb,flow,audio")

    p_loocv = sub.add_parser("loocv", help="leave-one-out cross-validation")
    add_common(p_loocv)
    p_loocv.add_argument("--parallel-folds", type=int, default=None)
    p_loocv.set_defaults(func=cmd_loocv)

    p_train = sub.add_parser("train", help="train once on listed clips")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on listed clips")
    add_common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_report = sub.add_parser("report", help="format evaluation reports as a table")
    p_report.add_argument("reports", nargs="+", help="EvalReport JSON files")
    p_report.add_argument("--reference", action="store_true",
                          help="append published benchmark reference rows")
    p_report.add_argument("--out", default=None, help="also write the table here")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
