"""Network-free style-objective terms exposed as image metrics.

Images may be ``(H, W)`` or ``(H, W, C)``; the batch size is always 1. All
differences are forward differences with the last row/column dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StyleLossWeights:
    alpha: float = 0.001
    beta: float = 1e7
    gamma: float = 0.005
    delta: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "epsilon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def _chw(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr[None]
    if arr.ndim == 3:
        return np.moveaxis(arr, 2, 0)
    raise ValueError(f"expected (H, W) or (H, W, C), got {arr.shape}")


def gram_matrix(features) -> np.ndarray:
    """``F F^T / (C * H * W)`` for a ``(C, H*W)`` or ``(C, H, W)`` feature stack."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 1:
        f = f[None]
    f = f.reshape(f.shape[0], -1)
    c, n = f.shape
    if c < 1 or n < 1:
        raise ValueError("features must have C >= 1 and H*W >= 1")
    return f @ f.T / (c * n)


def tv_loss(img) -> float:
    x = _chw(img)
    c, h, w = x.shape
    if h * w < 2:
        raise ValueError("image needs at least two pixels")
    dx = np.abs(np.diff(x, axis=2)).sum()
    dy = np.abs(np.diff(x, axis=1)).sum()
    return float((dx + dy) / (c * h * w))


def texture_loss(img) -> float:
    x = _chw(img)
    c, h, w = x.shape
    if h < 2 or w < 2:
        raise ValueError("image must be at least 2x2")
    dx = np.diff(x, axis=2)
    dy = np.diff(x, axis=1)
    return float((np.mean(dx ** 2) + np.mean(dy ** 2)) / (c * h * w))


def drip_loss(img) -> float:
    """Rewards strong, uniform downward flow: ``-mean|dy| + mean|dy - mean dy|``, over ``C H W``."""
    x = _chw(img)
    c, h, w = x.shape
    if h < 2:
        raise ValueError("image needs at least two rows")
    dy = np.diff(x, axis=1)
    norm = c * h * w
    return float(-np.mean(np.abs(dy)) / norm + np.mean(np.abs(dy - dy.mean())) / norm)


def style_metrics(img) -> dict:
    return {
        "tv_loss": tv_loss(img),
        "texture_loss": texture_loss(img),
        "drip_loss": drip_loss(img),
    }
