"""Video decoding and frame preprocessing for the image embedder."""

from __future__ import annotations

import numpy as np

import cv2

EXPECTED_FPS = 25.0
FPS_TOLERANCE = 0.01
CROP_SIZE = 224
# ImageNet channel statistics, RGB order
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class VideoDecodeError(RuntimeError):
    pass


def read_video(path, check_fps: bool = True) -> tuple[list[np.ndarray], float]:
    """Decode all frames as RGB uint8 arrays; validates the 25 fps contract."""
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoDecodeError(f"cannot open video: {path}")
    fps = cap.get(cv2.CAP_PROP_FPS)
    if check_fps and abs(fps - EXPECTED_FPS) > EXPECTED_FPS * FPS_TOLERANCE:
        cap.release()
        raise VideoDecodeError(
            f"{path}: frame rate {fps:.3f} outside {EXPECTED_FPS} +/- 1%"
        )
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        raise VideoDecodeError(f"{path}: no decodable frames")
    return frames, fps


def crop_offsets(height: int, width: int, policy: str, rng) -> tuple[int, int]:
    max_y, max_x = height - CROP_SIZE, width - CROP_SIZE
    if policy == "center":
        return max_y // 2, max_x // 2
    if policy == "random":
        return int(rng.integers(0, max_y + 1)), int(rng.integers(0, max_x + 1))
    raise ValueError(f"unknown crop policy {policy!r} (valid: center, random)")


def preprocess_frame(frame: np.ndarray, policy: str = "center", rng=None) -> np.ndarray:
    """Resize so both sides reach 224, crop 224x224, standardize channels.

    Returns a (3, 224, 224) float32 array ready for the embedder.
    """
    h, w = frame.shape[:2]
    scale = max(CROP_SIZE / h, CROP_SIZE / w)
    if scale > 1.0:
        frame = cv2.resize(frame, (max(CROP_SIZE, round(w * scale)),
                                   max(CROP_SIZE, round(h * scale))),
                           interpolation=cv2.INTER_LINEAR)
        h, w = frame.shape[:2]
    y, x = crop_offsets(h, w, policy, rng)
    crop = frame[y : y + CROP_SIZE, x : x + CROP_SIZE]
    out = crop.astype(np.float32) / 255.0
    out = (out - IMAGENET_MEAN) / IMAGENET_STD
    return out.transpose(2, 0, 1)
