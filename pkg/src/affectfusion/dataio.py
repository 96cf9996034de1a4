"""Feature-file, annotation, and manifest I/O plus modality alignment.

Feature file layout (little-endian):

    magic "AFF1" | modality u8 (0 rgb, 1 flow, 2 audio) | 3 reserved bytes
    | dim u32 | windows u32 | windows*dim float32 payload, row-major

Annotations are CSV with header ``frame,valence,arousal`` at 25 fps. A clip
manifest is a JSON object {clip_id, rgb, flow, audio, annotations,
pre_aligned}; a dataset manifest is a JSON array of clip manifests, with
relative paths resolved against the manifest's directory.
"""

from __future__ import annotations

import csv
import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

MAGIC = b"AFF1"
_HEADER = struct.Struct("<4sB3xII")
WARMUP_FRAMES = 9  # frames without a full 10-flow stack / 400 ms audio window
ALIGNMENT_TOLERANCE = 10
FRAMES_PER_SECOND = 25


class FeatureFileError(ValueError):
    """Base class for feature-file load failures."""


class BadMagicError(FeatureFileError):
    pass


class DimensionMismatchError(FeatureFileError):
    pass


class TruncatedPayloadError(FeatureFileError):
    pass


class AnnotationError(ValueError):
    pass


class AlignmentError(ValueError):
    pass


class Modality(enum.Enum):
    RGB = ("rgb", 0, 2048)
    FLOW = ("flow", 1, 2048)
    AUDIO = ("audio", 2, 1582)

    def __init__(self, key: str, code: int, dim: int):
        self.key = key
        self.code = code
        self.dim = dim

    @classmethod
    def from_key(cls, key: str) -> "Modality":
        for m in cls:
            if m.key == key:
                return m
        valid = ", ".join(m.key for m in cls)
        raise ValueError(f"unknown modality {key!r} (valid: {valid})")

    @classmethod
    def from_code(cls, code: int) -> "Modality":
        for m in cls:
            if m.code == code:
                return m
        raise BadMagicError(f"unknown modality code {code}")


ALL_MODALITIES = (Modality.RGB, Modality.FLOW, Modality.AUDIO)


@dataclass
class ModalityStream:
    """One modality's features for a whole clip: (windows, dim) float32."""

    modality: Modality
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {self.values.shape}")
        if self.values.shape[1] != self.modality.dim:
            raise DimensionMismatchError(
                f"{self.modality.key} feature dim {self.values.shape[1]} "
                f"!= declared {self.modality.dim}"
            )

    @property
    def windows(self) -> int:
        return self.values.shape[0]


def write_feature_file(path, stream: ModalityStream) -> None:
    values = np.ascontiguousarray(stream.values, dtype="<f4")
    header = _HEADER.pack(
        MAGIC, stream.modality.code, stream.modality.dim, stream.windows
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes())


def read_feature_file(path) -> ModalityStream:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise TruncatedPayloadError(f"{path}: file shorter than header")
        magic, code, dim, windows = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        modality = Modality.from_code(code)
        if dim != modality.dim:
            raise DimensionMismatchError(
                f"{path}: declared dim {dim} != {modality.key} dim {modality.dim}"
            )
        payload = fh.read()
    expected = windows * dim * 4
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(windows, dim)
    return ModalityStream(modality, values)


@dataclass
class AnnotationTrack:
    """Per-frame valence/arousal in [-1, 1] at 25 fps."""

    valence: np.ndarray
    arousal: np.ndarray
    frames_per_second: int = FRAMES_PER_SECOND

    def __post_init__(self):
        self.valence = np.asarray(self.valence, dtype=np.float64)
        self.arousal = np.asarray(self.arousal, dtype=np.float64)
        if self.valence.shape != self.arousal.shape or self.valence.ndim != 1:
            raise AnnotationError("valence and arousal must be 1-D and the same length")
        for name, arr in (("valence", self.valence), ("arousal", self.arousal)):
            if arr.size and (np.abs(arr) > 1.0).any():
                raise AnnotationError(f"{name} values must lie in [-1, 1]")

    def __len__(self) -> int:
        return self.valence.shape[0]


def write_annotations(path, track: AnnotationTrack) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "valence", "arousal"])
        for i, (v, a) in enumerate(zip(track.valence, track.arousal)):
            writer.writerow([i, repr(float(v)), repr(float(a))])


def read_annotations(path) -> AnnotationTrack:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["frame", "valence", "arousal"]:
            raise AnnotationError(f"{path}: expected header frame,valence,arousal, got {header}")
        valence, arousal = [], []
        for row in reader:
            if len(row) != 3:
                raise AnnotationError(f"{path}: malformed row {row}")
            if int(row[0]) != len(valence):
                raise AnnotationError(f"{path}: frame indices must run 0..n-1")
            valence.append(float(row[1]))
            arousal.append(float(row[2]))
    return AnnotationTrack(np.array(valence), np.array(arousal))


@dataclass
class FeatureWindow:
    """One aligned time step: per-modality feature vectors plus its labels."""

    index: int
    rgb: np.ndarray | None
    flow: np.ndarray | None
    audio: np.ndarray | None
    label_valence: float
    label_arousal: float

    def vector(self, modality: Modality) -> np.ndarray:
        vec = getattr(self, modality.key)
        if vec is None:
            raise ValueError(f"window has no {modality.key} features")
        return vec


@dataclass
class ClipDataset:
    """A clip's aligned windows, stored columnwise per modality."""

    clip_id: str
    features: dict[Modality, np.ndarray]  # (n_windows, dim) each
    valence: np.ndarray
    arousal: np.ndarray
    frame_indices: np.ndarray = field(default=None)  # frame of each window

    def __post_init__(self):
        n = len(self.valence)
        if n == 0:
            raise AlignmentError(f"clip {self.clip_id!r} has no windows")
        if self.frame_indices is None:
            self.frame_indices = np.arange(n)
        self.frame_indices = np.asarray(self.frame_indices, dtype=np.int64)
        if (np.diff(self.frame_indices) <= 0).any():
            raise AlignmentError("window indices must be strictly increasing")
        for m, arr in self.features.items():
            if arr.shape[0] != n:
                raise AlignmentError(
                    f"{m.key} has {arr.shape[0]} rows but clip has {n} windows"
                )

    @property
    def n_windows(self) -> int:
        return len(self.valence)

    @property
    def modalities(self) -> tuple[Modality, ...]:
        return tuple(m for m in ALL_MODALITIES if m in self.features)

    def labels(self, dimension) -> np.ndarray:
        return self.valence if dimension.value == "valence" else self.arousal

    def window(self, i: int) -> FeatureWindow:
        return FeatureWindow(
            index=int(self.frame_indices[i]),
            rgb=self.features[Modality.RGB][i] if Modality.RGB in self.features else None,
            flow=self.features[Modality.FLOW][i] if Modality.FLOW in self.features else None,
            audio=self.features[Modality.AUDIO][i] if Modality.AUDIO in self.features else None,
            label_valence=float(self.valence[i]),
            label_arousal=float(self.arousal[i]),
        )


def align_clip(
    rgb: ModalityStream,
    flow: ModalityStream,
    audio: ModalityStream,
    annotations: AnnotationTrack,
    clip_id: str = "",
    pre_aligned: bool = False,
) -> ClipDataset:
    """Build one FeatureWindow per usable frame.

    Without pre-alignment, the rgb stream is per-frame while flow/audio rows
    start at frame WARMUP_FRAMES (their windows need 10 flows / 400 ms of
    audio ending at that frame), so the first 9 frames are dropped and window
    i maps to frame i + 9. Pre-aligned streams map window i to frame i. Stream
    lengths may disagree by at most ALIGNMENT_TOLERANCE windows; the clip is
    truncated to the shortest.
    """
    streams = {Modality.RGB: rgb, Modality.FLOW: flow, Modality.AUDIO: audio}
    for m, s in streams.items():
        if s.modality is not m:
            raise AlignmentError(f"stream passed as {m.key} is {s.modality.key}")
        if s.windows == 0:
            raise AlignmentError(f"clip {clip_id!r}: {m.key} stream is empty")

    offset = 0 if pre_aligned else WARMUP_FRAMES
    candidates = {
        m: (s.windows - offset if m is Modality.RGB else s.windows)
        for m, s in streams.items()
    }
    shortest = min(candidates.values())
    longest = max(candidates.values())
    if longest - shortest > ALIGNMENT_TOLERANCE:
        detail = ", ".join(f"{m.key}={c}" for m, c in candidates.items())
        raise AlignmentError(
            f"clip {clip_id!r}: stream lengths disagree beyond "
            f"+/-{ALIGNMENT_TOLERANCE} windows ({detail})"
        )
    n = shortest
    if n <= 0:
        raise AlignmentError(f"clip {clip_id!r}: no alignable windows")
    if len(annotations) < offset + n:
        raise AlignmentError(
            f"clip {clip_id!r}: {len(annotations)} annotation frames < "
            f"{offset + n} required"
        )

    features = {
        m: (s.values[offset : offset + n] if m is Modality.RGB else s.values[:n])
        for m, s in streams.items()
    }
    return ClipDataset(
        clip_id=clip_id,
        features=features,
        valence=annotations.valence[offset : offset + n].copy(),
        arousal=annotations.arousal[offset : offset + n].copy(),
        frame_indices=np.arange(offset, offset + n),
    )


@dataclass
class ClipManifest:
    clip_id: str
    rgb: str
    flow: str
    audio: str
    annotations: str
    pre_aligned: bool = False

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "rgb": self.rgb,
            "flow": self.flow,
            "audio": self.audio,
            "annotations": self.annotations,
            "pre_aligned": self.pre_aligned,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipManifest":
        missing = {"clip_id", "rgb", "flow", "audio", "annotations"} - d.keys()
        if missing:
            raise ValueError(f"clip manifest missing keys: {sorted(missing)}")
        return cls(
            clip_id=d["clip_id"],
            rgb=d["rgb"],
            flow=d["flow"],
            audio=d["audio"],
            annotations=d["annotations"],
            pre_aligned=bool(d.get("pre_aligned", False)),
        )


def write_manifest(path, clips: Iterable[ClipManifest]) -> None:
    with open(path, "w") as fh:
        json.dump([c.to_dict() for c in clips], fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> list[ClipManifest]:
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError(f"{path}: dataset manifest must be a JSON array")
    return [ClipManifest.from_dict(e) for e in entries]


def load_clip(manifest: ClipManifest, base_dir) -> ClipDataset:
    base = Path(base_dir)
    streams = {}
    for m in ALL_MODALITIES:
        stream = read_feature_file(base / getattr(manifest, m.key))
        if stream.modality is not m:
            raise DimensionMismatchError(
                f"{manifest.clip_id}: file listed as {m.key} contains {stream.modality.key}"
            )
        streams[m] = stream
    annotations = read_annotations(base / manifest.annotations)
    return align_clip(
        streams[Modality.RGB],
        streams[Modality.FLOW],
        streams[Modality.AUDIO],
        annotations,
        clip_id=manifest.clip_id,
        pre_aligned=manifest.pre_aligned,
    )


def load_dataset(manifest_path) -> list[ClipDataset]:
    manifest_path = Path(manifest_path)
    clips = [load_clip(m, manifest_path.parent) for m in read_manifest(manifest_path)]
    ids = [c.clip_id for c in clips]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate clip_id in dataset manifest")
    return clips


@dataclass
class NormalizationStats:
    """Per-feature min/max for each modality, fit on training clips."""

    mins: dict[Modality, np.ndarray]
    maxs: dict[Modality, np.ndarray]
    source_clip_ids: tuple[str, ...] = ()

    def __post_init__(self):
        for m in self.mins:
            if (self.maxs[m] < self.mins[m]).any():
                raise ValueError(f"{m.key}: max < min")


def fit_minmax(
    clips: Iterable[ClipDataset], modalities: Iterable[Modality] | None = None
) -> NormalizationStats:
    clips = list(clips)
    if not clips:
        raise ValueError("need at least one clip to fit normalization stats")
    if modalities is None:
        modalities = clips[0].modalities
    mins: dict[Modality, np.ndarray] = {}
    maxs: dict[Modality, np.ndarray] = {}
    for m in modalities:
        mins[m] = np.min([c.features[m].min(axis=0) for c in clips], axis=0).astype(np.float64)
        maxs[m] = np.max([c.features[m].max(axis=0) for c in clips], axis=0).astype(np.float64)
    return NormalizationStats(mins, maxs, tuple(c.clip_id for c in clips))


def _scale(stats: NormalizationStats, m: Modality) -> np.ndarray:
    span = stats.maxs[m] - stats.mins[m]
    # degenerate columns (max == min) map to 0 so they carry no signal
    return np.where(span > 0, np.divide(1.0, span, where=span > 0), 0.0)


def apply_minmax(window: FeatureWindow, stats: NormalizationStats) -> FeatureWindow:
    """(v - min) / (max - min) per element; unclamped, degenerate columns -> 0."""
    out = {}
    for m in stats.mins:
        vec = window.vector(m).astype(np.float64)
        if vec.shape[0] != stats.mins[m].shape[0]:
            raise ValueError(f"{m.key}: stats dim {stats.mins[m].shape[0]} != {vec.shape[0]}")
        out[m.key] = (vec - stats.mins[m]) * _scale(stats, m)
    return FeatureWindow(
        index=window.index,
        rgb=out.get("rgb"),
        flow=out.get("flow"),
        audio=out.get("audio"),
        label_valence=window.label_valence,
        label_arousal=window.label_arousal,
    )


def apply_minmax_clip(clip: ClipDataset, stats: NormalizationStats) -> ClipDataset:
    """Whole-clip normalization to float64, restricted to the stats' modalities."""
    features = {}
    for m in stats.mins:
        features[m] = (clip.features[m].astype(np.float64) - stats.mins[m]) * _scale(stats, m)
    return ClipDataset(
        clip_id=clip.clip_id,
        features=features,
        valence=clip.valence,
        arousal=clip.arousal,
        frame_indices=clip.frame_indices,
    )
