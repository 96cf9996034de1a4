"""Dense optical flow between consecutive frames, quantized and stacked in 10s."""

from __future__ import annotations

import numpy as np

import cv2

STACK_SIZE = 10
FLOW_SIZE = 224
# displacements are clipped to +/- FLOW_BOUND pixels before 8-bit quantization
FLOW_BOUND = 20.0


def dense_flow(prev_rgb: np.ndarray, next_rgb: np.ndarray) -> np.ndarray:
    """Farneback flow between two RGB frames; (h, w, 2) float32 in pixels."""
    prev_gray = cv2.cvtColor(prev_rgb, cv2.COLOR_RGB2GRAY)
    next_gray = cv2.cvtColor(next_rgb, cv2.COLOR_RGB2GRAY)
    return cv2.calcOpticalFlowFarneback(
        prev_gray, next_gray, None,
        pyr_scale=0.5, levels=3, winsize=15, iterations=3,
        poly_n=5, poly_sigma=1.2, flags=0,
    )


def quantize_flow(flow: np.ndarray) -> np.ndarray:
    """Map [-FLOW_BOUND, FLOW_BOUND] pixels to integers in [0, 255]; 0 -> 128."""
    scaled = np.clip(flow, -FLOW_BOUND, FLOW_BOUND) * (127.5 / FLOW_BOUND) + 127.5
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def flow_images(frames: list[np.ndarray]) -> np.ndarray:
    """Quantized two-channel flow images resized to 224x224; (n-1, 224, 224, 2)."""
    if len(frames) < 2:
        raise ValueError(f"need at least 2 frames for optical flow, got {len(frames)}")
    out = np.empty((len(frames) - 1, FLOW_SIZE, FLOW_SIZE, 2), dtype=np.uint8)
    for i in range(len(frames) - 1):
        flow = dense_flow(frames[i], frames[i + 1])
        resized = cv2.resize(flow, (FLOW_SIZE, FLOW_SIZE), interpolation=cv2.INTER_LINEAR)
        out[i] = quantize_flow(resized)
    return out


def stack_count(n_flows: int) -> int:
    """Sliding windows of 10 consecutive flows: n frames yield n - 10 stacks."""
    if n_flows < STACK_SIZE:
        raise ValueError(f"need >= {STACK_SIZE} flows to build a stack, got {n_flows}")
    return n_flows - STACK_SIZE + 1


def iter_stack_batches(quantized: np.ndarray, batch_size: int):
    """Yield standardized (B, 20, 224, 224) float32 stack batches.

    Stacks are assembled lazily from the uint8 flow images so long clips never
    materialize all float32 stacks at once. Channel order per stack:
    [flow0_x, flow0_y, flow1_x, flow1_y, ...].
    """
    n_stacks = stack_count(quantized.shape[0])
    for start in range(0, n_stacks, batch_size):
        stop = min(start + batch_size, n_stacks)
        group = np.stack([quantized[i : i + STACK_SIZE] for i in range(start, stop)])
        group = group.astype(np.float32) / 255.0          # (B, 10, H, W, 2)
        group = np.moveaxis(group, 4, 2)                  # (B, 10, 2, H, W)
        batch = group.reshape(stop - start, 2 * STACK_SIZE, FLOW_SIZE, FLOW_SIZE)
        yield (batch - 0.5) / 0.226
