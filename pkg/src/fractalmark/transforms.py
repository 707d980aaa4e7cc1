"""Orthonormal block DCT-II and multi-level 2D Haar DWT."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .errors import NonSquareBlock, TooManyLevels

_SQRT2 = np.sqrt(2.0)


def dct2(block) -> np.ndarray:
    """Orthonormal 2D DCT-II of a square block."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise NonSquareBlock(f"expected square block, got {block.shape}")
    if block.shape[0] < 2:
        raise NonSquareBlock("block size must be >= 2")
    return fft.dctn(block, type=2, norm="ortho")


def idct2(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
        raise NonSquareBlock(f"expected square block, got {coeffs.shape}")
    return fft.idctn(coeffs, type=2, norm="ortho")


def blockwise_dct(blocks) -> np.ndarray:
    """DCT over the trailing two axes of a ``(..., B, B)`` stack."""
    return fft.dctn(np.asarray(blocks, dtype=np.float64), type=2, norm="ortho", axes=(-2, -1))


def blockwise_idct(coeffs) -> np.ndarray:
    return fft.idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho", axes=(-2, -1))


@dataclass
class HaarLevel:
    LL: np.ndarray
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray
    input_shape: tuple[int, int]

    def details(self):
        return self.LH, self.HL, self.HH


@dataclass
class DwtPyramid:
    """Haar analysis levels, finest first. ``levels[k].LL`` feeds level ``k + 1``."""

    levels: list[HaarLevel] = field(default_factory=list)
    shape: tuple[int, int] = (0, 0)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def approximation(self) -> np.ndarray:
        return self.levels[-1].LL


def _extend_even(x: np.ndarray) -> np.ndarray:
    # symmetric extension by one sample on odd axes
    h, w = x.shape
    if h % 2:
        x = np.concatenate([x, x[-1:, :]], axis=0)
    if w % 2:
        x = np.concatenate([x, x[:, -1:]], axis=1)
    return x


def haar_step(x) -> HaarLevel:
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    x = _extend_even(x)
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    # LH: horizontal edges (row difference), HL: vertical edges (column difference)
    return HaarLevel(
        LL=(a + b + c + d) / 2.0,
        LH=(a + b - c - d) / 2.0,
        HL=(a - b + c - d) / 2.0,
        HH=(a - b - c + d) / 2.0,
        input_shape=shape,
    )


def haar_step_inverse(level: HaarLevel, LL=None) -> np.ndarray:
    LL = level.LL if LL is None else LL
    LH, HL, HH = level.LH, level.HL, level.HH
    h2, w2 = LL.shape
    out = np.empty((2 * h2, 2 * w2))
    out[0::2, 0::2] = (LL + LH + HL + HH) / 2.0
    out[0::2, 1::2] = (LL + LH - HL - HH) / 2.0
    out[1::2, 0::2] = (LL - LH + HL - HH) / 2.0
    out[1::2, 1::2] = (LL - LH - HL + HH) / 2.0
    h, w = level.input_shape
    return out[:h, :w]


def haar_dwt2(img, levels: int = 1) -> DwtPyramid:
    """Orthonormal multi-level Haar analysis; odd sizes use symmetric extension."""
    img = np.asarray(img, dtype=np.float64)
    if levels < 1:
        raise TooManyLevels("levels must be >= 1")
    if min(img.shape) < 2 ** levels:
        raise TooManyLevels(f"{levels} levels need min side >= {2 ** levels}, got {img.shape}")
    pyr = DwtPyramid(shape=img.shape)
    current = img
    for _ in range(levels):
        lvl = haar_step(current)
        pyr.levels.append(lvl)
        current = lvl.LL
    return pyr


def haar_idwt2(pyr: DwtPyramid) -> np.ndarray:
    current = pyr.levels[-1].LL
    for lvl in reversed(pyr.levels):
        current = haar_step_inverse(lvl, LL=current)
    return current
