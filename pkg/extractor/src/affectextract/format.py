"""Writers for the downstream pipeline's on-disk formats.

Feature file (little-endian): magic "AFF1", modality code u8 (0 rgb, 1 flow,
2 audio), 3 reserved bytes, dim u32, windows u32, then windows*dim float32
row-major. Annotations: CSV "frame,valence,arousal". Dataset manifest: JSON
array of {clip_id, rgb, flow, audio, annotations, pre_aligned}.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"AFF1"
_HEADER = struct.Struct("<4sB3xII")

MODALITY_CODES = {"rgb": 0, "flow": 1, "audio": 2}
MODALITY_DIMS = {"rgb": 2048, "flow": 2048, "audio": 1582}


def write_feature_file(path, modality: str, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2 or values.shape[1] != MODALITY_DIMS[modality]:
        raise ValueError(
            f"{modality} features must be (windows, {MODALITY_DIMS[modality]}), "
            f"got {values.shape}"
        )
    if not np.isfinite(values).all():
        raise ValueError(f"{modality} features contain non-finite values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, MODALITY_CODES[modality],
                              values.shape[1], values.shape[0]))
        fh.write(values.tobytes())


def write_placeholder_annotations(path, n_frames: int) -> None:
    """Neutral all-zero labels so alignment can run before real annotations exist."""
    with open(path, "w", newline="") as fh:
        fh.write("frame,valence,arousal\n")
        for i in range(n_frames):
            fh.write(f"{i},0.0,0.0\n")


def write_manifest(path, clips: list[dict]) -> None:
    with open(path, "w") as fh:
        json.dump(clips, fh, indent=2, sort_keys=True)
        fh.write("\n")
