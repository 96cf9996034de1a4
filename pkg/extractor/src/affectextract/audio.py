"""Low-level audio descriptors: 1,582 features per 400 ms window, 40 ms hop.

The window is cut into 25 ms subframes (10 ms hop, 38 per window). Per
subframe we compute 34 regular low-level descriptors (loudness, MFCC 0-14,
8 log mel bands, 8 line spectral frequencies, F0 envelope, voicing
probability) and 4 pitch descriptors (F0, local jitter, delta-delta jitter,
local shimmer). Per window, each descriptor and its delta series map through
21 statistical functionals (19 for the pitch group, dropping the extremum
positions), plus a voiced-onset count and the window duration:

    34 * 2 * 21 + 4 * 2 * 19 + 2 = 1582

Feature order: [funcs(LLD_0..33), funcs(dLLD_0..33), funcs19(P_0..3),
funcs19(dP_0..3), onsets, duration]. Everything is deterministic and finite,
including on silent input.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct, rfft
from scipy.io import wavfile
from scipy.signal import resample_poly

SAMPLE_RATE = 16000
FRAME_SECONDS = 0.4
HOP_SECONDS = 0.04
SUB_SECONDS = 0.025
SUB_HOP_SECONDS = 0.010

N_FFT = 512
N_MELS = 26
N_MFCC = 15
N_MEL_BANDS = 8
LPC_ORDER = 8
F0_MIN, F0_MAX = 50.0, 400.0
VOICING_THRESHOLD = 0.55
AUDIO_DIM = 1582

_EPS = 1e-10


class AudioError(ValueError):
    pass


def load_wav(path) -> np.ndarray:
    """Mono float64 signal at 16 kHz; resamples and downmixes as needed."""
    rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float64) / np.iinfo(data.dtype).max
    else:
        data = data.astype(np.float64)
    if rate != SAMPLE_RATE:
        g = np.gcd(int(rate), SAMPLE_RATE)
        data = resample_poly(data, SAMPLE_RATE // g, rate // g)
    return data


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT,
                   rate: int = SAMPLE_RATE) -> np.ndarray:
    """Triangular mel filters over the rfft bins; (n_mels, n_fft // 2 + 1)."""
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    points = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2), n_mels + 2))
    bins = np.floor((n_fft + 1) * points / rate).astype(int)
    bank = np.zeros((n_mels, n_fft // 2 + 1))
    for i in range(n_mels):
        left, center, right = bins[i], bins[i + 1], bins[i + 2]
        center = max(center, left + 1)
        right = max(right, center + 1)
        bank[i, left:center] = (np.arange(left, center) - left) / (center - left)
        bank[i, center:right] = (right - np.arange(center, right)) / (right - center)
    return bank


def _levinson(autocorr: np.ndarray, order: int) -> np.ndarray:
    """LPC coefficients [1, a1..ap] from an autocorrelation sequence."""
    a = np.zeros(order + 1)
    a[0] = 1.0
    error = autocorr[0]
    if error <= _EPS:
        return a
    for i in range(1, order + 1):
        acc = autocorr[i] + a[1:i] @ autocorr[i - 1 : 0 : -1]
        k = -acc / error
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][: i]
        error *= 1.0 - k * k
        if error <= _EPS:
            break
    return a


def _lsp_frequencies(lpc: np.ndarray, order: int = LPC_ORDER) -> np.ndarray:
    """Line spectral frequencies (radians in (0, pi)) of an LPC polynomial."""
    a = np.concatenate([lpc, [0.0]])
    sum_poly = a + a[::-1]      # P(z), root at z = -1 for even order
    diff_poly = a - a[::-1]     # Q(z), root at z = +1
    sum_poly = np.polydiv(sum_poly, np.array([1.0, 1.0]))[0]
    diff_poly = np.polydiv(diff_poly, np.array([1.0, -1.0]))[0]
    freqs = []
    for poly in (sum_poly, diff_poly):
        roots = np.roots(poly)
        angles = np.angle(roots[np.imag(roots) > 0.0])
        freqs.extend(angles.tolist())
    freqs = sorted(f for f in freqs if 0.0 < f < np.pi)
    out = np.zeros(order)
    out[: min(order, len(freqs))] = freqs[:order]
    return out


def _subframe_llds(signal: np.ndarray):
    """Per-subframe descriptor matrices for the whole signal.

    Returns (regular (n_sub, 34), pitch (n_sub, 4), voiced mask (n_sub,)).
    """
    sub_len = int(SUB_SECONDS * SAMPLE_RATE)
    sub_hop = int(SUB_HOP_SECONDS * SAMPLE_RATE)
    frames = sliding_window_view(signal, sub_len)[::sub_hop].copy()
    n_sub = frames.shape[0]
    window = np.hamming(sub_len)
    windowed = frames * window

    spectrum = np.abs(rfft(windowed, n=N_FFT, axis=1)) ** 2
    bank = mel_filterbank()
    mel_energy = np.log(spectrum @ bank.T + _EPS)
    mfcc = dct(mel_energy, type=2, norm="ortho", axis=1)[:, :N_MFCC]
    loudness = np.log(spectrum.sum(axis=1) + _EPS)

    # pitch by normalized autocorrelation over the plausible lag range
    lag_min = int(SAMPLE_RATE / F0_MAX)
    lag_max = min(int(SAMPLE_RATE / F0_MIN), sub_len - 1)
    spec_full = np.abs(rfft(frames, n=2 * sub_len, axis=1)) ** 2
    autocorr = np.fft.irfft(spec_full, axis=1)[:, :sub_len]
    energy = autocorr[:, 0]
    norm = np.where(energy > _EPS, autocorr[:, 0], 1.0)
    search = autocorr[:, lag_min : lag_max + 1] / norm[:, None]
    peak_lag = lag_min + np.argmax(search, axis=1)
    voicing = np.clip(search[np.arange(n_sub), peak_lag - lag_min], 0.0, 1.0)
    voicing[energy <= _EPS] = 0.0
    voiced = voicing > VOICING_THRESHOLD
    f0 = np.where(voiced, SAMPLE_RATE / peak_lag, 0.0)

    # LPC-derived line spectral frequencies, subframe by subframe
    lsp = np.zeros((n_sub, LPC_ORDER))
    for j in range(n_sub):
        if energy[j] > _EPS:
            r = autocorr[j, : LPC_ORDER + 1].copy()
            r[0] *= 1.0 + 1e-6  # white-noise floor keeps Levinson stable
            lsp[j] = _lsp_frequencies(_levinson(r, LPC_ORDER))

    # jitter/shimmer from period and amplitude variation between subframes
    period = np.where(f0 > 0, 1.0 / np.maximum(f0, _EPS), 0.0)
    mean_period = period[voiced].mean() if voiced.any() else 0.0
    dperiod = np.abs(np.diff(period, prepend=period[:1]))
    jitter = np.where(mean_period > 0, dperiod / max(mean_period, _EPS), 0.0)
    ddperiod = np.abs(np.diff(dperiod, prepend=dperiod[:1]))
    jitter_ddp = np.where(mean_period > 0, ddperiod / max(mean_period, _EPS), 0.0)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    mean_rms = rms.mean()
    shimmer = np.abs(np.diff(rms, prepend=rms[:1])) / max(mean_rms, _EPS)

    # F0 envelope: short moving average over the contour
    kernel = np.ones(5) / 5.0
    f0_env = np.convolve(f0, kernel, mode="same")

    regular = np.column_stack([
        loudness, mfcc, mel_energy[:, :N_MEL_BANDS], lsp, f0_env, voicing,
    ])
    pitch = np.column_stack([f0, jitter, jitter_ddp, shimmer])
    return regular, pitch, voiced


def _functionals(series: np.ndarray, with_positions: bool) -> np.ndarray:
    """Vectorized statistics over (n_rows, L) series; 21 or 19 per row."""
    n_rows, length = series.shape
    t = np.linspace(0.0, 1.0, length)
    mean = series.mean(axis=1)
    centered = series - mean[:, None]
    std = series.std(axis=1)
    safe_std = np.maximum(std, _EPS)
    skew = (centered**3).mean(axis=1) / safe_std**3
    kurt = (centered**4).mean(axis=1) / safe_std**4
    skew[std < 1e-12] = 0.0
    kurt[std < 1e-12] = 0.0

    t_centered = t - t.mean()
    slope = (centered @ t_centered) / (t_centered @ t_centered)
    offset = mean - slope * t.mean()
    residual = series - (slope[:, None] * t[None, :] + offset[:, None])
    err_abs = np.abs(residual).mean(axis=1)
    err_sq = (residual**2).mean(axis=1)

    q1, q2, q3 = np.percentile(series, [25, 50, 75], axis=1)
    p1, p99 = np.percentile(series, [1, 99], axis=1)
    lo = series.min(axis=1)
    span = series.max(axis=1) - lo
    up75 = (series > (lo + 0.75 * span)[:, None]).mean(axis=1)
    up90 = (series > (lo + 0.90 * span)[:, None]).mean(axis=1)

    columns = []
    if with_positions:
        columns += [series.argmax(axis=1) / (length - 1),
                    series.argmin(axis=1) / (length - 1)]
    columns += [mean, slope, offset, err_abs, err_sq, std, skew, kurt,
                q1, q2, q3, q2 - q1, q3 - q2, q3 - q1, p1, p99, p99 - p1,
                up75, up90]
    return np.column_stack(columns)


def _delta(series: np.ndarray) -> np.ndarray:
    padded = np.pad(series, ((1, 1), (0, 0)), mode="edge")
    return (padded[2:] - padded[:-2]) / 2.0


def extract_audio_features(signal: np.ndarray) -> np.ndarray:
    """(n_windows, 1582) float32 descriptor matrix for a 16 kHz mono signal."""
    frame_len = int(FRAME_SECONDS * SAMPLE_RATE)
    hop_len = int(HOP_SECONDS * SAMPLE_RATE)
    if signal.shape[0] < frame_len:
        raise AudioError(
            f"audio too short: {signal.shape[0] / SAMPLE_RATE:.3f}s < {FRAME_SECONDS}s"
        )
    n_rows = (signal.shape[0] - frame_len) // hop_len + 1

    regular, pitch, voiced = _subframe_llds(signal)
    d_regular = _delta(regular)
    d_pitch = _delta(pitch)

    subs_per_window = int((FRAME_SECONDS - SUB_SECONDS) / SUB_HOP_SECONDS) + 1  # 38
    subs_per_hop = int(HOP_SECONDS / SUB_HOP_SECONDS)  # 4
    gather = (np.arange(n_rows)[:, None] * subs_per_hop
              + np.arange(subs_per_window)[None, :])
    if gather.max() >= regular.shape[0]:
        raise AudioError("subframe grid shorter than expected; signal truncated?")

    blocks = []
    for matrix, with_pos in ((regular, True), (d_regular, True),
                             (pitch, False), (d_pitch, False)):
        for channel in range(matrix.shape[1]):
            blocks.append(_functionals(matrix[gather, channel], with_pos))

    onsets = np.diff(voiced[gather].astype(np.int8), axis=1, prepend=0) > 0
    blocks.append(onsets.sum(axis=1).astype(np.float64)[:, None])
    blocks.append(np.full((n_rows, 1), FRAME_SECONDS))

    features = np.column_stack(blocks).astype(np.float32)
    if features.shape[1] != AUDIO_DIM:
        raise RuntimeError(f"descriptor layout produced {features.shape[1]} dims, "
                           f"expected {AUDIO_DIM}")
    if not np.isfinite(features).all():
        raise RuntimeError("non-finite audio descriptors")
    return features
