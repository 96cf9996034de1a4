"""Penultimate-layer CNN embedders for frames and flow stacks.

Both embedders are standard torchvision ResNets with the classification head
removed: ResNet-50 for RGB frames and ResNet-101 (first conv widened to 20
input channels) for stacks of 10 two-channel flow images. Pretrained weights
are loaded from a local state-dict file when provided; otherwise the network
falls back to a seeded random initialization so runs stay deterministic, and
the manifest records which one was used.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn
from torchvision import models


def _strip_head(net: nn.Module) -> nn.Module:
    net.fc = nn.Identity()
    net.eval()
    for p in net.parameters():
        p.requires_grad_(False)
    return net


def _load_or_seed(net: nn.Module, weights_path, seed: int) -> str:
    if weights_path is not None:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
        net.load_state_dict(state, strict=False)
        return f"state-dict:{weights_path}"
    return f"random-init(seed={seed})"


def build_rgb_embedder(weights_path=None, seed: int = 0) -> tuple[nn.Module, str]:
    """ResNet-50 minus its classifier: (3, 224, 224) -> 2048."""
    torch.manual_seed(seed)
    net = models.resnet50(weights=None)
    provenance = "resnet50/" + _load_or_seed(net, weights_path, seed)
    return _strip_head(net), provenance


def build_flow_embedder(weights_path=None, seed: int = 0) -> tuple[nn.Module, str]:
    """ResNet-101 with a 20-channel first conv: (20, 224, 224) -> 2048."""
    torch.manual_seed(seed)
    net = models.resnet101(weights=None)
    net.conv1 = nn.Conv2d(20, 64, kernel_size=7, stride=2, padding=3, bias=False)
    torch.manual_seed(seed + 1)
    nn.init.kaiming_normal_(net.conv1.weight, mode="fan_out", nonlinearity="relu")
    provenance = "resnet101-flow20/" + _load_or_seed(net, weights_path, seed)
    return _strip_head(net), provenance


def embed_stream(net: nn.Module, batches) -> np.ndarray:
    """Run an iterable of (B, c, 224, 224) float32 batches -> (n, 2048)."""
    rows = []
    with torch.no_grad():
        for batch in batches:
            rows.append(net(torch.from_numpy(np.ascontiguousarray(batch)))
                        .numpy().astype(np.float32))
    out = np.concatenate(rows, axis=0)
    if out.shape[1] != 2048:
        raise RuntimeError(f"embedder produced dim {out.shape[1]}, expected 2048")
    return out
