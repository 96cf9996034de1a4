"""Deterministic synthetic dataset generator plus naive-loop oracles.

The generator writes feature files, annotations, and a manifest in the real
on-disk formats with the real dimensions (2048/2048/1582). Latent valence and
arousal follow smooth periodic drifts whose values cover [-1, 1] uniformly,
so the 7 quantized classes stay balanced; each modality's features blend a
fixed random linear embedding of the latent pair with Gaussian noise:

    features = separability * (latent @ M.T) + (1 - separability) * noise

At separability 1 an affine decoder recovers the latent exactly; at 0 the
features are pure noise.

The oracle functions re-implement the classifiers' forward math as plain
Python loops, sharing no code with the production paths, for equivalence
testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import (
    ALL_MODALITIES,
    WARMUP_FRAMES,
    AnnotationTrack,
    ClipManifest,
    Modality,
    ModalityStream,
    write_annotations,
    write_feature_file,
    write_manifest,
)

LATENT_DIM = 2  # (valence, arousal)


@dataclass
class SynthSpec:
    clips: int = 12
    frames_per_clip: int = 2000
    seed: int = 0
    separability: float = 1.0
    drift_period: int = 500

    def __post_init__(self):
        if self.clips < 2:
            raise ValueError(f"need >= 2 clips for leave-one-out, got {self.clips}")
        if self.frames_per_clip < 100:
            raise ValueError(f"frames_per_clip must be >= 100, got {self.frames_per_clip}")
        if not 0.0 <= self.separability <= 1.0:
            raise ValueError(f"separability must be in [0, 1], got {self.separability}")
        if self.drift_period < 2:
            raise ValueError(f"drift_period must be >= 2, got {self.drift_period}")


def _triangle(t: np.ndarray, period: float, phase: float) -> np.ndarray:
    """Periodic ramp in [-1, 1] whose values are uniformly distributed."""
    x = np.mod(t / period + phase, 1.0)
    return 4.0 * np.abs(x - 0.5) - 1.0


def _latent_tracks(spec: SynthSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 2) latent valence/arousal with clip-specific periods and phases."""
    t = np.arange(n, dtype=np.float64)
    tracks = []
    for _ in range(LATENT_DIM):
        period = spec.drift_period * rng.uniform(0.8, 1.2)
        tracks.append(_triangle(t, period, rng.uniform(0.0, 1.0)))
    return np.stack(tracks, axis=1)


def generate(spec: SynthSpec, out_dir) -> Path:
    """Write the synthetic dataset and return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))

    # one embedding per modality, shared across clips so folds generalize
    embeddings = {m: rng.standard_normal((m.dim, LATENT_DIM)) for m in ALL_MODALITIES}

    s = spec.separability
    manifests = []
    for k in range(spec.clips):
        clip_id = f"clip{k:03d}"
        n = spec.frames_per_clip
        latent = _latent_tracks(spec, rng, n)

        paths = {}
        for m in ALL_MODALITIES:
            # rgb rows cover every frame; flow/audio rows start at the first
            # frame with a full flow stack / audio window (their row i is frame
            # i + WARMUP_FRAMES), which is what align_clip expects
            frame_latent = latent if m is Modality.RGB else latent[WARMUP_FRAMES:]
            signal = frame_latent @ embeddings[m].T
            noise = rng.standard_normal(signal.shape)
            values = (s * signal + (1.0 - s) * noise).astype(np.float32)
            paths[m.key] = f"{clip_id}_{m.key}.aff"
            write_feature_file(out / paths[m.key], ModalityStream(m, values))

        ann_path = f"{clip_id}_annotations.csv"
        write_annotations(out / ann_path, AnnotationTrack(latent[:, 0], latent[:, 1]))
        manifests.append(
            ClipManifest(
                clip_id=clip_id,
                rgb=paths["rgb"],
                flow=paths["flow"],
                audio=paths["audio"],
                annotations=ann_path,
                pre_aligned=False,
            )
        )

    manifest_path = out / "manifest.json"
    write_manifest(manifest_path, manifests)
    return manifest_path


# ---------------------------------------------------------------------------
# naive-loop oracles (no shared code with the production forward passes)


def _listify(vec) -> list[float]:
    return [float(v) for v in np.asarray(vec).ravel()]


def _matvec(weights, x: list[float]) -> list[float]:
    rows = np.asarray(weights).tolist()
    return [sum(row[j] * x[j] for j in range(len(x))) for row in rows]


def _oracle_dense(layer, x: list[float]) -> list[float]:
    bias = _listify(layer.bias)
    prod = _matvec(layer.weights, x)
    return [prod[j] + bias[j] for j in range(len(bias))]


def _oracle_relu(x: list[float]) -> list[float]:
    return [v if v > 0.0 else 0.0 for v in x]


def _oracle_sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _oracle_softmax(logits: list[float], temperature: float) -> list[float]:
    scaled = [z / temperature for z in logits]
    top = max(scaled)
    exps = [math.exp(z - top) for z in scaled]
    total = sum(exps)
    return [e / total for e in exps]


def oracle_forward_fc(window, params, temperature: float) -> list[float]:
    """Straight-line transcription of the fc classifier, scalar loops only.

    ``window`` may be a FeatureWindow or a mapping of Modality to vector.
    """
    blocks = []
    for m in params.modalities:
        vec = window[m] if isinstance(window, dict) else window.vector(m)
        blocks.extend(_oracle_relu(_oracle_dense(params.projections[m], _listify(vec))))
    a1 = _oracle_relu(_oracle_dense(params.hidden1, blocks))
    a2 = _oracle_relu(_oracle_dense(params.hidden2, a1))
    return _oracle_softmax(_oracle_dense(params.output, a2), temperature)


def oracle_lstm_step(params, x, prev_c, prev_h) -> tuple[list[float], list[float]]:
    """Scalar-loop LSTM step; returns (c, h) lists.

    Gates: f/i/o = sigmoid(W_x. x + W_h. h_prev + b_.), g = tanh(...),
    c = f*c_prev + i*g, h = o*tanh(c).
    """
    x = _listify(x)
    prev_c = _listify(prev_c)
    prev_h = _listify(prev_h)

    def gate(w_x, w_h, b, squash):
        xs = _matvec(w_x, x)
        hs = _matvec(w_h, prev_h)
        bs = _listify(b)
        return [squash(xs[j] + hs[j] + bs[j]) for j in range(len(bs))]

    f = gate(params.W_xf, params.W_hf, params.b_f, _oracle_sigmoid)
    i = gate(params.W_xi, params.W_hi, params.b_i, _oracle_sigmoid)
    g = gate(params.W_xc, params.W_hc, params.b_c, math.tanh)
    c = [f[j] * prev_c[j] + i[j] * g[j] for j in range(len(f))]
    o = gate(params.W_xo, params.W_ho, params.b_o, _oracle_sigmoid)
    h = [o[j] * math.tanh(c[j]) for j in range(len(c))]
    return c, h
