import numpy as np
import pytest
from scipy.signal import savgol_filter

from affectfusion.labeling import (
    NUM_CLASSES,
    Dimension,
    EmotionLabel,
    ReconstructionConfig,
    bin_center,
    moving_average,
    quantize,
    quantize_values,
    reconstruct_continuous,
    savitzky_golay,
)


def sg_oracle(signal, window, polyorder):
    """Independent per-window least-squares fit; interior samples only."""
    x = np.asarray(signal, dtype=float)
    m = window // 2
    out = np.full(x.shape, np.nan)
    for i in range(m, x.size - m):
        pos = np.arange(-m, m + 1, dtype=float)
        coeffs = np.polynomial.polynomial.polyfit(pos, x[i - m : i + m + 1], polyorder)
        out[i] = coeffs[0]  # polynomial value at the window center
    return out


class TestQuantize:
    def test_lower_edge(self):
        assert quantize(-1.0).class_index == 0

    def test_upper_edge_clamps_into_top_bin(self):
        assert quantize(1.0).class_index == 6

    def test_zero_is_middle_bin(self):
        assert quantize(0.0).class_index == 3

    def test_out_of_range_clamped(self):
        assert quantize(-2.0).class_index == 0
        assert quantize(3.5).class_index == 6

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            quantize(float("nan"))

    def test_monotone_on_grid(self):
        grid = np.linspace(-1.0, 1.0, 10001)
        ks = quantize_values(grid)
        assert (np.diff(ks) >= 0).all()
        assert ks[0] == 0 and ks[-1] == 6

    def test_bin_edges_half_open(self):
        # edges at -1 + 2k/7 belong to bin k, except the top edge
        for k in range(1, 7):
            edge = -1.0 + 2.0 * k / 7.0
            assert quantize(edge).class_index == k
            assert quantize(edge - 1e-12).class_index == k - 1

    def test_vectorized_agrees_with_scalar(self, rng):
        values = rng.uniform(-1, 1, size=500)
        ks = quantize_values(values)
        assert all(quantize(float(v)).class_index == k for v, k in zip(values, ks))

    def test_dimension_tag(self):
        label = quantize(0.3, Dimension.AROUSAL)
        assert label.dimension is Dimension.AROUSAL


class TestBinCenter:
    def test_middle_is_zero(self):
        assert bin_center(3) == 0.0

    def test_class_zero(self):
        assert bin_center(0) == pytest.approx(-6.0 / 7.0, abs=1e-12)

    def test_round_trip(self):
        for k in range(NUM_CLASSES):
            assert quantize(bin_center(k)).class_index == k

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            bin_center(7)
        with pytest.raises(ValueError):
            bin_center(-1)
        with pytest.raises(ValueError):
            EmotionLabel(9)


class TestMovingAverage:
    def test_constant_unchanged(self):
        out = moving_average(np.full(50, 0.4), 25)
        assert np.allclose(out, 0.4, atol=1e-15)

    def test_edges_average_available_samples(self):
        out = moving_average([0.0, 3.0, 0.0], 3)
        assert np.allclose(out, [1.5, 1.0, 1.5], atol=1e-15)

    def test_window_one_is_identity(self, rng):
        x = rng.normal(size=20)
        assert np.allclose(moving_average(x, 1), x, atol=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            moving_average([], 3)

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            moving_average([1.0, 2.0], 2)

    def test_shift_equivariant_interior(self, rng):
        x = rng.normal(size=60)
        shifted = np.roll(x, 3)
        a = moving_average(x, 7)
        b = moving_average(shifted, 7)
        assert np.allclose(a[10:40], b[13:43], atol=1e-12)


class TestSavitzkyGolay:
    @pytest.mark.parametrize("degree", [0, 1, 2, 3])
    def test_polynomial_reproduction(self, degree):
        t = np.linspace(-1, 1, 200)
        coeffs = [0.3, -1.2, 0.8, 0.5][: degree + 1]
        signal = sum(c * t**p for p, c in enumerate(coeffs))
        out = savitzky_golay(signal, 51, 3)
        assert np.allclose(out, signal, atol=1e-9)

    def test_constant_unchanged(self):
        out = savitzky_golay(np.full(100, 2.5), 11, 2)
        assert np.allclose(out, 2.5, atol=1e-12)

    def test_matches_per_window_least_squares(self, rng):
        x = rng.normal(size=80)
        out = savitzky_golay(x, 5, 2)
        expected = sg_oracle(x, 5, 2)
        interior = slice(2, 78)
        assert np.allclose(out[interior], expected[interior], atol=1e-9)

    def test_matches_scipy_with_interp_edges(self, rng):
        x = rng.normal(size=120)
        for window, order in ((5, 2), (11, 3), (25, 4)):
            ours = savitzky_golay(x, window, order)
            ref = savgol_filter(x, window, order, mode="interp")
            assert np.allclose(ours, ref, atol=1e-9), (window, order)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            savitzky_golay(np.zeros(4), 5, 2)

    def test_bad_parameters_rejected(self):
        with pytest.raises(ValueError):
            savitzky_golay(np.zeros(10), 4, 2)
        with pytest.raises(ValueError):
            savitzky_golay(np.zeros(10), 5, 5)

    def test_shift_equivariant_interior(self, rng):
        x = rng.normal(size=90)
        a = savitzky_golay(x, 7, 2)
        b = savitzky_golay(np.roll(x, 5), 7, 2)
        assert np.allclose(a[20:60], b[25:65], atol=1e-9)


class TestReconstructContinuous:
    def test_constant_class_passes_through(self):
        out = reconstruct_continuous([3] * 200, ReconstructionConfig())
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_constant_nonzero_class_keeps_bin_center(self):
        out = reconstruct_continuous([5] * 200, ReconstructionConfig())
        assert np.allclose(out, bin_center(5), atol=1e-12)

    def test_nonconstant_rescaled_to_full_range(self, rng):
        classes = rng.integers(0, 7, size=400)
        out = reconstruct_continuous(classes, ReconstructionConfig())
        assert out.min() == pytest.approx(-1.0, abs=1e-12)
        assert out.max() == pytest.approx(1.0, abs=1e-12)
        assert out.shape == (400,)

    def test_alternating_extremes_smooth_toward_midrange(self):
        classes = np.tile([0, 6], 300)
        centers = np.where(classes == 0, bin_center(0), bin_center(6))
        cfg = ReconstructionConfig()
        smoothed = moving_average(centers, cfg.lowpass_window)
        # pre-rescale the filters must pull the square wave well inside the bins
        assert np.abs(smoothed[50:-50]).max() < 0.2

    def test_short_sequence_falls_back_to_valid_window(self):
        out = reconstruct_continuous([0, 1, 2, 3, 4], ReconstructionConfig())
        assert out.shape == (5,)
        assert np.isfinite(out).all()
        assert (np.abs(out) <= 1.0 + 1e-12).all()

    def test_output_within_unit_range(self, rng):
        for n in (5, 30, 101, 400):
            classes = rng.integers(0, 7, size=n)
            out = reconstruct_continuous(classes, ReconstructionConfig())
            assert out.shape == (n,)
            assert (out >= -1.0 - 1e-12).all() and (out <= 1.0 + 1e-12).all()

    def test_accepts_emotion_labels(self):
        labels = [EmotionLabel(k % 7) for k in range(100)]
        out = reconstruct_continuous(labels, ReconstructionConfig())
        assert out.shape == (100,)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            reconstruct_continuous([], ReconstructionConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ReconstructionConfig(lowpass_window=4)
        with pytest.raises(ValueError):
            ReconstructionConfig(sg_window=51, sg_polyorder=51)
