"""Seven-class quantization of valence/arousal and class-to-curve reconstruction.

Continuous annotations in [-1, 1] map to 7 equal-width bins. Predicted class
sequences are turned back into continuous curves by bin-center lookup, a
centered moving average, a Savitzky-Golay filter, and an affine rescale to
[-1, 1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 7
_BIN_WIDTH = 2.0 / NUM_CLASSES


class Dimension(enum.Enum):
    VALENCE = "valence"
    AROUSAL = "arousal"


@dataclass(frozen=True)
class EmotionLabel:
    """Quantized class in {0..6} for one emotion dimension."""

    class_index: int
    dimension: Dimension | None = None

    def __post_init__(self):
        if not 0 <= self.class_index < NUM_CLASSES:
            raise ValueError(f"class index {self.class_index} out of range [0, {NUM_CLASSES})")


def quantize(value: float, dimension: Dimension | None = None) -> EmotionLabel:
    """Map a value in [-1, 1] (clamped) to its bin: min(6, floor((v + 1) / (2/7)))."""
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    v = min(1.0, max(-1.0, value))
    k = min(NUM_CLASSES - 1, int(math.floor((v + 1.0) / _BIN_WIDTH)))
    return EmotionLabel(k, dimension)


def quantize_values(values) -> np.ndarray:
    """Vectorized quantize: float array -> int class array."""
    v = np.asarray(values, dtype=np.float64)
    if not np.isfinite(v).all():
        raise ValueError("cannot quantize non-finite values")
    v = np.clip(v, -1.0, 1.0)
    k = np.floor((v + 1.0) / _BIN_WIDTH).astype(np.int64)
    return np.minimum(k, NUM_CLASSES - 1)


def bin_center(class_index: int) -> float:
    """Midpoint of bin k: -1 + (2/7) * (k + 0.5)."""
    if not 0 <= class_index < NUM_CLASSES:
        raise ValueError(f"class index {class_index} out of range [0, {NUM_CLASSES})")
    return -1.0 + _BIN_WIDTH * (class_index + 0.5)


BIN_CENTERS = np.array([bin_center(k) for k in range(NUM_CLASSES)])


@dataclass
class ReconstructionConfig:
    """Filter parameters for turning class sequences into continuous curves."""

    lowpass_window: int = 25
    sg_window: int = 51
    sg_polyorder: int = 3

    def __post_init__(self):
        for name in ("lowpass_window", "sg_window"):
            w = getattr(self, name)
            if w < 3 or w % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 3, got {w}")
        if not 0 <= self.sg_polyorder < self.sg_window:
            raise ValueError(
                f"sg_polyorder must be in [0, sg_window), got {self.sg_polyorder}"
            )


def moving_average(signal, window: int) -> np.ndarray:
    """Centered moving average; edge windows are clipped to the valid range."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("signal must be nonempty")
    half = window // 2
    # prefix sums give each clipped-window mean in O(1)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


def savgol_coefficients(window: int, polyorder: int) -> np.ndarray:
    """Least-squares filter taps: fit degree-polyorder polynomial on positions
    -m..m and read off its value at 0."""
    m = window // 2
    pos = np.arange(-m, m + 1, dtype=np.float64)
    basis = np.vander(pos, polyorder + 1, increasing=True)  # (window, order+1)
    # value at center = coefficient of x^0 of the LS fit; row 0 of pinv gives it
    return np.linalg.pinv(basis)[0]


def _polyfit_eval(xs: np.ndarray, ys: np.ndarray, polyorder: int, at: np.ndarray) -> np.ndarray:
    center = xs.mean()  # centered positions keep the Vandermonde well conditioned
    coeffs = np.linalg.lstsq(
        np.vander(xs - center, polyorder + 1, increasing=True), ys, rcond=None
    )[0]
    return np.vander(at - center, polyorder + 1, increasing=True) @ coeffs


def savitzky_golay(signal, window: int, polyorder: int) -> np.ndarray:
    """Savitzky-Golay smoothing.

    Interior samples are the center values of a least-squares polynomial fit
    over the sliding window; the first/last half-window samples come from
    evaluating the polynomial fitted to the first/last full window.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[0]
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if not 0 <= polyorder < window:
        raise ValueError(f"polyorder must be in [0, window), got {polyorder}")
    if n < window:
        raise ValueError(f"signal length {n} shorter than window {window}")
    taps = savgol_coefficients(window, polyorder)
    out = np.empty(n)
    m = window // 2
    out[m : n - m] = np.correlate(x, taps, mode="valid")
    pos = np.arange(window, dtype=np.float64)
    out[:m] = _polyfit_eval(pos, x[:window], polyorder, pos[:m])
    out[n - m :] = _polyfit_eval(pos, x[n - window :], polyorder, pos[m + 1 :])
    return out


def _largest_odd_at_most(n: int) -> int:
    return n if n % 2 == 1 else n - 1


def reconstruct_continuous(classes, config: ReconstructionConfig | None = None) -> np.ndarray:
    """Class sequence -> smoothed continuous curve in [-1, 1].

    Bin centers are low-pass filtered, Savitzky-Golay smoothed, then affinely
    rescaled so min -> -1 and max -> +1. A constant filtered signal is returned
    as-is (its bin-center value). Sequences shorter than a filter window fall
    back to the largest valid odd window.
    """
    if config is None:
        config = ReconstructionConfig()
    ks = np.asarray(
        [c.class_index if isinstance(c, EmotionLabel) else int(c) for c in classes],
        dtype=np.int64,
    )
    if ks.size == 0:
        raise ValueError("class sequence must be nonempty")
    if ks.min() < 0 or ks.max() >= NUM_CLASSES:
        raise ValueError("class indices out of range")
    curve = BIN_CENTERS[ks]

    lp = min(config.lowpass_window, _largest_odd_at_most(ks.size))
    curve = moving_average(curve, lp)

    sg = min(config.sg_window, _largest_odd_at_most(ks.size))
    if sg >= 3:
        order = min(config.sg_polyorder, sg - 1)
        curve = savitzky_golay(curve, sg, order)

    lo, hi = curve.min(), curve.max()
    # class sequences that actually vary produce spans far above this; anything
    # smaller is float noise from the filters on a constant signal
    if hi - lo > 1e-9 * max(1.0, abs(hi), abs(lo)):
        curve = -1.0 + 2.0 * (curve - lo) / (hi - lo)
    return curve
