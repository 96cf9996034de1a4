import hashlib
import json

import pytest

from affectfusion.cli import build_parser, main


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Tiny dataset plus a fast-training run config."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["synth", "--out", str(data), "--clips", "2", "--frames", "160",
                 "--seed", "7", "--drift-period", "60"]) == 0
    config = {
        "manifest": str(data / "manifest.json"),
        "output_dir": str(root / "out"),
        "model": "fc",
        "dimension": "valence",
        "training": {
            "learning_rate": 0.05,
            "weight_decay": 0.0005,
            "epochs": 2,
            "patience": 2,
            "batch_size": 64,
            "seed": 3,
        },
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config))
    return root, config_path


class TestSynth:
    def test_default_spec_is_twelve_clips(self):
        args = build_parser().parse_args(["synth", "--out", "x"])
        assert args.clips == 12 and args.frames == 2000

    def test_prints_manifest_path(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path / "d"), "--clips", "2",
                     "--frames", "120"]) == 0
        out = capsys.readouterr().out.strip()
        assert out.endswith("manifest.json")

    def test_single_clip_rejected(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path), "--clips", "1"]) == 1
        assert "2 clips" in capsys.readouterr().err

    def test_same_seed_same_checksums(self, tmp_path):
        for sub in ("a", "b"):
            main(["synth", "--out", str(tmp_path / sub), "--clips", "2",
                  "--frames", "120", "--seed", "5"])
        hashes = [
            sorted(sha(p) for p in (tmp_path / sub).iterdir()) for sub in ("a", "b")
        ]
        assert hashes[0] == hashes[1]


class TestLoocvCommand:
    def test_writes_report_table_and_curves(self, workspace, capsys):
        root, config_path = workspace
        assert main(["loocv", "--config", str(config_path)]) == 0
        out_dir = root / "out"
        report_path = out_dir / "report_fc_valence_rgb-flow-audio.json"
        assert report_path.is_file()
        report = json.loads(report_path.read_text())
        assert report["n_folds"] == 2
        table = (out_dir / "table_fc_valence_rgb-flow-audio.txt").read_text()
        assert "Model with FC layers" in table
        assert "RGB frame + OF + Audio" in table
        curves = sorted((out_dir / "curves_fc_valence_rgb-flow-audio").iterdir())
        assert [c.name for c in curves] == ["clip000.csv", "clip001.csv"]
        assert (out_dir / "run_meta.json").is_file()

    def test_byte_identical_reports_across_runs(self, workspace, tmp_path):
        root, config_path = workspace
        names = []
        for sub in ("r1", "r2"):
            assert main(["loocv", "--config", str(config_path),
                         "--out", str(tmp_path / sub)]) == 0
            names.append(tmp_path / sub / "report_fc_valence_rgb-flow-audio.json")
        assert names[0].read_bytes() == names[1].read_bytes()

    def test_audio_only_ablation(self, workspace, tmp_path, capsys):
        root, config_path = workspace
        assert main(["loocv", "--config", str(config_path), "--out", str(tmp_path),
                     "--modalities", "audio"]) == 0
        report = json.loads((tmp_path / "report_fc_valence_audio.json").read_text())
        assert report["modalities"] == ["audio"]

    def test_invalid_modality_lists_valid_names(self, workspace, capsys):
        root, config_path = workspace
        assert main(["loocv", "--config", str(config_path),
                     "--modalities", "rgb,thermal"]) == 1
        err = capsys.readouterr().err
        assert "thermal" in err and "rgb, flow, audio" in err

    def test_missing_manifest_is_validation_error(self, tmp_path, capsys):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"manifest": "nope/manifest.json"}))
        assert main(["loocv", "--config", str(config)]) == 1
        assert "not found" in capsys.readouterr().err

    def test_unknown_config_key_reported(self, workspace, tmp_path, capsys):
        root, config_path = workspace
        raw = json.loads(config_path.read_text())
        raw["modell"] = "fc"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(raw))
        assert main(["loocv", "--config", str(bad)]) == 1
        assert "unknown config key" in capsys.readouterr().err


@pytest.fixture(scope="module")
def train_config(workspace, tmp_path_factory):
    root, config_path = workspace
    out = tmp_path_factory.mktemp("trainout")
    raw = json.loads(config_path.read_text())
    raw["output_dir"] = str(out)
    raw["train_clips"] = ["clip000", "clip001"]
    raw["training"]["epochs"] = 12
    raw["training"]["patience"] = 12
    path = out / "train_config.json"
    path.write_text(json.dumps(raw))
    return path, out


class TestTrainEvalCommands:
    def test_train_writes_reproducible_checkpoint(self, train_config):
        path, out = train_config
        assert main(["train", "--config", str(path)]) == 0
        ckpt = out / "checkpoint_fc_valence_rgb-flow-audio.ckpt"
        first = sha(ckpt)
        assert main(["train", "--config", str(path)]) == 0
        assert sha(ckpt) == first
        assert (out / "train_report_fc_valence_rgb-flow-audio.json").is_file()

    def test_eval_on_train_clips_beats_loocv(self, workspace, train_config, tmp_path):
        root, config_path = workspace
        path, out = train_config
        assert main(["train", "--config", str(path)]) == 0
        raw = json.loads(path.read_text())
        raw["test_clips"] = ["clip000", "clip001"]
        raw["checkpoint"] = str(out / "checkpoint_fc_valence_rgb-flow-audio.ckpt")
        eval_config = out / "eval_config.json"
        eval_config.write_text(json.dumps(raw))
        assert main(["eval", "--config", str(eval_config)]) == 0
        results = json.loads((out / "eval_fc_valence_rgb-flow-audio.json").read_text())
        train_side_acc = sum(r["accuracy"] for r in results.values()) / len(results)

        assert main(["loocv", "--config", str(config_path), "--out", str(tmp_path)]) == 0
        loocv = json.loads(
            (tmp_path / "report_fc_valence_rgb-flow-audio.json").read_text()
        )
        assert train_side_acc >= loocv["aggregate"]["accuracy"]

    def test_eval_wrong_architecture_rejected(self, train_config, capsys):
        path, out = train_config
        assert main(["train", "--config", str(path)]) == 0
        raw = json.loads(path.read_text())
        raw["model"] = "lstm"
        raw["training"]["epochs"] = 2
        raw["training"]["patience"] = 2
        raw["test_clips"] = ["clip000"]
        raw["checkpoint"] = str(out / "checkpoint_fc_valence_rgb-flow-audio.ckpt")
        bad = out / "wrong_arch.json"
        bad.write_text(json.dumps(raw))
        assert main(["eval", "--config", str(bad)]) == 1
        assert "architecture" in capsys.readouterr().err

    def test_eval_missing_checkpoint(self, train_config, capsys):
        path, out = train_config
        raw = json.loads(path.read_text())
        raw["test_clips"] = ["clip000"]
        raw["checkpoint"] = str(out / "missing.ckpt")
        bad = out / "missing_ckpt.json"
        bad.write_text(json.dumps(raw))
        assert main(["eval", "--config", str(bad)]) == 1

    def test_lstm_train_and_eval_round_trip(self, workspace, tmp_path):
        root, config_path = workspace
        raw = json.loads(config_path.read_text())
        raw["output_dir"] = str(tmp_path)
        raw["model"] = "lstm"
        raw["dimension"] = "arousal"
        raw["training"]["batch_size"] = 32
        raw["train_clips"] = ["clip000", "clip001"]
        cfg = tmp_path / "lstm.json"
        cfg.write_text(json.dumps(raw))
        assert main(["train", "--config", str(cfg)]) == 0
        raw["test_clips"] = ["clip000"]
        raw["checkpoint"] = str(tmp_path / "checkpoint_lstm_arousal_rgb-flow-audio.ckpt")
        cfg.write_text(json.dumps(raw))
        assert main(["eval", "--config", str(cfg)]) == 0
        results = json.loads(
            (tmp_path / "eval_lstm_arousal_rgb-flow-audio.json").read_text()
        )
        # warm-up windows carry no prediction: 151 - 40 evaluated
        assert results["clip000"]["n_eval_windows"] == 111

    def test_train_unknown_clip_id(self, train_config, capsys):
        path, out = train_config
        raw = json.loads(path.read_text())
        raw["train_clips"] = ["clip999"]
        bad = out / "bad_clip.json"
        bad.write_text(json.dumps(raw))
        assert main(["train", "--config", str(bad)]) == 1
        assert "clip999" in capsys.readouterr().err


class TestReportCommand:
    def test_formats_and_appends_reference(self, workspace, tmp_path, capsys):
        root, config_path = workspace
        assert main(["loocv", "--config", str(config_path), "--out", str(tmp_path)]) == 0
        report = tmp_path / "report_fc_valence_rgb-flow-audio.json"
        out_file = tmp_path / "combined.txt"
        assert main(["report", str(report), "--reference", "--out", str(out_file)]) == 0
        text = out_file.read_text()
        assert "Leave-one-out cross-validation: valence" in text
        assert "Reference results" in text
        assert "43.10" in text  # published fusion-valence accuracy

    def test_missing_report_file(self, capsys):
        assert main(["report", "/nonexistent/report.json"]) == 1
