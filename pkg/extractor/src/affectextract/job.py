"""Extraction jobs: video/audio in, pipeline-format feature files out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import audio as audio_mod
from . import embedders, flow, format as fmt, video

ALL_MODALITIES = ("rgb", "flow", "audio")


@dataclass
class ExtractionJob:
    video_path: Path
    out_dir: Path
    audio_path: Path | None = None          # sidecar WAV with the clip's audio track
    annotations_path: Path | None = None
    modalities: tuple[str, ...] = ALL_MODALITIES
    crop_policy: str = "center"             # "center" or "random"
    seed: int = 0
    rgb_weights: Path | None = None
    flow_weights: Path | None = None
    batch_size: int = 16

    def __post_init__(self):
        self.video_path = Path(self.video_path)
        self.out_dir = Path(self.out_dir)
        unknown = set(self.modalities) - set(ALL_MODALITIES)
        if unknown:
            raise ValueError(f"unknown modalities: {sorted(unknown)} "
                             f"(valid: {', '.join(ALL_MODALITIES)})")
        if not self.modalities:
            raise ValueError("modality subset must be nonempty")

    @property
    def clip_id(self) -> str:
        return self.video_path.stem


def extract_rgb(job: ExtractionJob, frames: list[np.ndarray]) -> tuple[np.ndarray, str]:
    """One 2048-d embedding per frame from the image network."""
    rng = np.random.default_rng(job.seed)

    def batches():
        for start in range(0, len(frames), job.batch_size):
            yield np.stack([
                video.preprocess_frame(f, job.crop_policy, rng)
                for f in frames[start : start + job.batch_size]
            ])

    net, provenance = embedders.build_rgb_embedder(job.rgb_weights, job.seed)
    rows = embedders.embed_stream(net, batches())
    return rows, provenance


def extract_flow(job: ExtractionJob, frames: list[np.ndarray]) -> tuple[np.ndarray, str]:
    """One 2048-d embedding per 10-flow stack; n frames -> n - 10 rows."""
    if len(frames) < flow.STACK_SIZE + 1:
        raise ValueError(
            f"need >= {flow.STACK_SIZE + 1} frames for flow stacks, got {len(frames)}"
        )
    quantized = flow.flow_images(frames)
    net, provenance = embedders.build_flow_embedder(job.flow_weights, job.seed)
    rows = embedders.embed_stream(
        net, flow.iter_stack_batches(quantized, max(1, job.batch_size // 4))
    )
    return rows, provenance


def extract_audio(job: ExtractionJob) -> np.ndarray:
    """1,582 descriptors per 400 ms window at a 40 ms hop."""
    if job.audio_path is None:
        raise ValueError(
            "no audio track: supply --audio with the clip's WAV "
            "(container demuxing is not available in this environment)"
        )
    signal = audio_mod.load_wav(job.audio_path)
    return audio_mod.extract_audio_features(signal)


def run(job: ExtractionJob) -> Path:
    """Extract the requested modalities and emit a dataset manifest."""
    job.out_dir.mkdir(parents=True, exist_ok=True)
    frames = None
    if {"rgb", "flow"} & set(job.modalities):
        frames, _ = video.read_video(job.video_path)

    provenance: dict[str, str] = {}
    entry = {"clip_id": job.clip_id, "pre_aligned": False}
    n_frames = len(frames) if frames is not None else 0

    if "rgb" in job.modalities:
        rows, prov = extract_rgb(job, frames)
        name = f"{job.clip_id}_rgb.aff"
        fmt.write_feature_file(job.out_dir / name, "rgb", rows)
        entry["rgb"] = name
        provenance["rgb"] = prov

    if "flow" in job.modalities:
        rows, prov = extract_flow(job, frames)
        name = f"{job.clip_id}_flow.aff"
        fmt.write_feature_file(job.out_dir / name, "flow", rows)
        entry["flow"] = name
        provenance["flow"] = prov

    if "audio" in job.modalities:
        rows = extract_audio(job)
        name = f"{job.clip_id}_audio.aff"
        fmt.write_feature_file(job.out_dir / name, "audio", rows)
        entry["audio"] = name
        provenance["audio"] = f"descriptor-set-1582/v1 ({rows.shape[0]} windows)"

    ann_name = f"{job.clip_id}_annotations.csv"
    if job.annotations_path is not None:
        (job.out_dir / ann_name).write_bytes(Path(job.annotations_path).read_bytes())
        provenance["annotations"] = str(job.annotations_path)
    else:
        # neutral zeros; real labels replace this file before training
        n_rows = n_frames if n_frames else rows.shape[0]
        fmt.write_placeholder_annotations(job.out_dir / ann_name, n_rows)
        provenance["annotations"] = "placeholder-zeros"
    entry["annotations"] = ann_name

    # downstream readers ignore extra manifest keys, so provenance rides along
    entry["provenance"] = {"seed": job.seed, "crop_policy": job.crop_policy,
                           "weights": provenance}
    manifest_path = job.out_dir / "manifest.json"
    fmt.write_manifest(manifest_path, [entry])
    return manifest_path
