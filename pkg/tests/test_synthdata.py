import hashlib

import numpy as np
import pytest

from affectfusion.dataio import ALL_MODALITIES, Modality, load_dataset, read_manifest
from affectfusion.labeling import quantize_values
from affectfusion.synthdata import SynthSpec, _triangle, generate


def dir_checksums(root):
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.iterdir())
        if p.is_file()
    }


class TestSpecValidation:
    def test_too_few_clips(self):
        with pytest.raises(ValueError):
            SynthSpec(clips=1)

    def test_too_few_frames(self):
        with pytest.raises(ValueError):
            SynthSpec(frames_per_clip=50)

    def test_bad_separability(self):
        with pytest.raises(ValueError):
            SynthSpec(separability=1.5)


class TestTriangle:
    def test_range_and_uniform_coverage(self):
        t = np.arange(10000, dtype=float)
        wave = _triangle(t, 500.0, 0.25)
        assert wave.min() >= -1.0 and wave.max() <= 1.0
        # uniform value distribution: each of 7 equal bins gets ~1/7
        counts = np.bincount(quantize_values(wave), minlength=7) / wave.size
        assert np.all(np.abs(counts - 1 / 7) < 0.02)


class TestGenerate:
    def test_dataset_loads_through_validators(self, small_synth_dataset):
        clips = load_dataset(small_synth_dataset)
        assert len(clips) == 2
        for clip in clips:
            assert clip.n_windows == 160 - 9
            assert clip.frame_indices[0] == 9
            for m in ALL_MODALITIES:
                assert clip.features[m].shape == (151, m.dim)
                assert np.isfinite(clip.features[m]).all()
            assert (np.abs(clip.valence) <= 1).all()

    def test_manifest_lists_all_clips(self, small_synth_dataset):
        entries = read_manifest(small_synth_dataset)
        assert [e.clip_id for e in entries] == ["clip000", "clip001"]
        assert all(not e.pre_aligned for e in entries)

    def test_same_seed_bit_identical(self, tmp_path):
        spec = SynthSpec(clips=2, frames_per_clip=120, seed=42, separability=0.5)
        a, b = tmp_path / "a", tmp_path / "b"
        generate(spec, a)
        generate(spec, b)
        assert dir_checksums(a) == dir_checksums(b)

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate(SynthSpec(clips=2, frames_per_clip=120, seed=1), a)
        generate(SynthSpec(clips=2, frames_per_clip=120, seed=2), b)
        assert dir_checksums(a) != dir_checksums(b)

    def test_labels_balanced_at_defaults(self, tmp_path):
        # smaller than the default 12x2000 corpus but same drift geometry
        manifest = generate(SynthSpec(clips=6, frames_per_clip=1000, seed=3), tmp_path / "d")
        clips = load_dataset(manifest)
        for labels in ("valence", "arousal"):
            values = np.concatenate([getattr(c, labels) for c in clips])
            counts = np.bincount(quantize_values(values), minlength=7) / values.size
            assert np.all(counts > (1 / 7) * 0.8), counts
            assert np.all(counts < (1 / 7) * 1.2), counts

    def test_separability_one_is_affine_decodable(self, small_synth_dataset):
        # features = latent @ M.T exactly with a shared M, so a decoder fitted
        # on one clip must recover the other clip's latent valence too
        a, b = load_dataset(small_synth_dataset)
        xa = a.features[Modality.AUDIO].astype(np.float64)
        coef, *_ = np.linalg.lstsq(xa, a.valence, rcond=None)
        xb = b.features[Modality.AUDIO].astype(np.float64)
        assert np.allclose(xb @ coef, b.valence, atol=1e-3)

    def test_separability_zero_has_no_signal(self, tmp_path):
        manifest = generate(
            SynthSpec(clips=2, frames_per_clip=150, seed=9, separability=0.0),
            tmp_path / "noise",
        )
        clips = load_dataset(manifest)
        # the same fixed embedding explains nothing: correlation of the best
        # least-squares fit on one clip transfers at chance to the other
        a, b = clips
        xa = a.features[Modality.AUDIO].astype(np.float64)
        coef, *_ = np.linalg.lstsq(xa, a.valence, rcond=None)
        xb = b.features[Modality.AUDIO].astype(np.float64)
        pred_b = xb @ coef
        corr = np.corrcoef(pred_b, b.valence)[0, 1]
        assert abs(corr) < 0.35
