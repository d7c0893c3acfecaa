"""Pluggable embedding/classifier backbones.

The desk-scale defaults are frozen, fixed-seed convolutional towers: fully
deterministic and dependency-free. A pretrained classifier (e.g. an
Inception build) drops in behind the same interface at full scale.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


class EmbeddingBackbone(Protocol):
    def embed(self, images: np.ndarray) -> np.ndarray:
        """NHWC images in [-1,1] -> (n, k) features."""
        ...

    def classify(self, images: np.ndarray) -> np.ndarray:
        """NHWC images in [-1,1] -> (n, C) probability rows summing to 1."""
        ...


def _to_nchw(images: np.ndarray) -> torch.Tensor:
    arr = np.asarray(images, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    return torch.from_numpy(arr).permute(0, 3, 1, 2)


class FrozenConvBackbone(nn.Module):
    """Fixed-seed random convolutional tower with multi-stage features,
    a pooled embedding head, and a softmax classifier head."""

    def __init__(self, seed: int = 0, embed_dim: int = 64, num_classes: int = 10,
                 widths: tuple[int, ...] = (16, 32, 64)):
        super().__init__()
        torch.manual_seed(seed)
        stages = []
        ch = 3
        for w in widths:
            stages.append(nn.Sequential(
                nn.Conv2d(ch, w, 3, stride=2, padding=1),
                nn.LeakyReLU(0.2),
                nn.Conv2d(w, w, 3, padding=1),
                nn.LeakyReLU(0.2),
            ))
            ch = w
        self.stages = nn.ModuleList(stages)
        self.embed_head = nn.Linear(ch, embed_dim)
        self.class_head = nn.Linear(ch, num_classes)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    @torch.no_grad()
    def _pooled(self, x: torch.Tensor) -> torch.Tensor:
        for stage in self.stages:
            x = stage(x)
        return F.adaptive_avg_pool2d(x, 1).flatten(1)

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Per-stage feature maps (used by the perceptual loss; keeps grads)."""
        out = []
        for stage in self.stages:
            x = stage(x)
            out.append(x)
        return out

    @torch.no_grad()
    def embed(self, images: np.ndarray) -> np.ndarray:
        return self.embed_head(self._pooled(_to_nchw(images))).numpy()

    @torch.no_grad()
    def classify(self, images: np.ndarray) -> np.ndarray:
        logits = self.class_head(self._pooled(_to_nchw(images)))
        return torch.softmax(logits, dim=1).numpy()


_REGISTRY = {
    "frozen": lambda: FrozenConvBackbone(seed=0),
}


def get_backbone(name: str) -> FrozenConvBackbone:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown backbone {name!r}; known: {sorted(_REGISTRY)}")
    return factory()
