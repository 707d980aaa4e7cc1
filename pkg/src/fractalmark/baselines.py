"""Comparison watermarkers: LSB, classical block-DCT and classical Haar-DWT.

All three carry a 64-bit payload at key-selected positions and are detected
blind by the normalized (cosine) correlation between the values read back
from those positions and the +/-1 payload, using the same threshold as the
feature method. Transform methods replace the selected coefficient with
``+/- strength`` so an unattacked image reads back exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ImageTooSmall, MethodUnknown
from .imaging import partition_blocks, to_uint8
from .transforms import blockwise_dct, blockwise_idct, haar_dwt2, haar_idwt2

PAYLOAD_BITS = 64
DCT_SLOT = (3, 4)
DEFAULT_THRESHOLD = 0.95
MIN_SIDE = 64


class BaselineKind(str, Enum):
    LSB = "lsb"
    DCT_CLASSIC = "dct"
    DWT_CLASSIC = "dwt"

    @classmethod
    def parse(cls, name) -> "BaselineKind":
        if isinstance(name, cls):
            return name
        key = str(name).lower()
        for k in cls:
            if key in (k.value, k.name.lower()):
                return k
        raise MethodUnknown(f"unknown baseline {name!r}")


# strength per kind, in orthonormal coefficient units ([0, 1] intensities).
# DCT was tuned on the desk corpus to match the feature method's PSNR; DWT
# reuses the DCT amplitude because replacement there is host-limited.
DEFAULT_STRENGTH = {
    BaselineKind.LSB: 0.0,
    BaselineKind.DCT_CLASSIC: 0.05,
    BaselineKind.DWT_CLASSIC: 0.05,
}


def make_payload(seed: int = 0, n: int = PAYLOAD_BITS) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([0xB17, seed])).integers(0, 2, n).astype(np.uint8)


def _signs(payload) -> np.ndarray:
    return 2.0 * np.asarray(payload, dtype=np.float64) - 1.0


def _positions(n_slots: int, n_bits: int, key: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([0x5107, key, n_slots]))
    return np.sort(rng.choice(n_slots, size=n_bits, replace=False))


def _check_size(img):
    if min(img.shape[:2]) < MIN_SIDE:
        raise ImageTooSmall(f"baselines need >= {MIN_SIDE}x{MIN_SIDE}, got {img.shape[:2]}")


def normalized_correlation(values, payload) -> float:
    v = np.asarray(values, dtype=np.float64).ravel()
    p = _signs(payload)
    if v.size != p.size:
        p = np.resize(p, v.size)
    den = math.sqrt(float(v @ v) * float(p @ p))
    if den == 0.0:
        return 0.0
    return float(v @ p) / den


# --------------------------------------------------------------------------
# per-kind embed / read


def _lsb_embed(img, payload):
    q = to_uint8(img)
    bits = np.resize(np.asarray(payload, dtype=np.uint8), q.size).reshape(q.shape)
    return ((q & 0xFE) | bits).astype(np.float64) / 255.0


def _lsb_read(img):
    return _signs(to_uint8(img) & 1)


def _dct_coeffs(gray):
    grid = partition_blocks(gray, 8)
    return grid, blockwise_dct(grid.blocks)


def _dct_embed(gray, payload, strength, key):
    grid, coeffs = _dct_coeffs(gray)
    rows, cols = coeffs.shape[:2]
    pos = _positions(rows * cols, len(payload), key)
    u, v = DCT_SLOT
    flat = coeffs[:, :, u, v].reshape(-1)
    flat[pos] = strength * _signs(payload)
    coeffs[:, :, u, v] = flat.reshape(rows, cols)
    return grid.assemble(blockwise_idct(coeffs))


def _dct_read(gray, n_bits, key):
    _, coeffs = _dct_coeffs(gray)
    rows, cols = coeffs.shape[:2]
    pos = _positions(rows * cols, n_bits, key)
    return coeffs[:, :, DCT_SLOT[0], DCT_SLOT[1]].reshape(-1)[pos]


def _dwt_bands(pyr):
    lvl = pyr.levels[1]
    return lvl.LH, lvl.HL


def _dwt_embed(gray, payload, strength, key):
    pyr = haar_dwt2(gray, 2)
    lh, hl = _dwt_bands(pyr)
    flat = np.concatenate([lh.ravel(), hl.ravel()])
    pos = _positions(flat.size, len(payload), key)
    flat[pos] = strength * _signs(payload)
    lh[...] = flat[: lh.size].reshape(lh.shape)
    hl[...] = flat[lh.size:].reshape(hl.shape)
    return haar_idwt2(pyr)


def _dwt_read(gray, n_bits, key):
    lh, hl = _dwt_bands(haar_dwt2(gray, 2))
    flat = np.concatenate([lh.ravel(), hl.ravel()])
    return flat[_positions(flat.size, n_bits, key)]


# --------------------------------------------------------------------------
# public interface


def baseline_embed(img, kind, payload, strength: float | None = None, key: int = 0) -> np.ndarray:
    kind = BaselineKind.parse(kind)
    img = np.asarray(img, dtype=np.float64)
    _check_size(img)
    if strength is None:
        strength = DEFAULT_STRENGTH[kind]
    if kind is BaselineKind.LSB:
        return _lsb_embed(img, payload)
    if img.ndim != 2:
        raise ValueError("transform baselines expect grayscale input")
    if strength == 0:
        # replacing by 0 would erase host coefficients; zero strength means no mark
        return img.copy()
    if kind is BaselineKind.DCT_CLASSIC:
        out = _dct_embed(img, payload, strength, key)
    else:
        out = _dwt_embed(img, payload, strength, key)
    return np.clip(out, 0.0, 1.0)


def baseline_read(img, kind, n_bits: int = PAYLOAD_BITS, key: int = 0) -> np.ndarray:
    kind = BaselineKind.parse(kind)
    img = np.asarray(img, dtype=np.float64)
    _check_size(img)
    if kind is BaselineKind.LSB:
        return _lsb_read(img)
    if kind is BaselineKind.DCT_CLASSIC:
        return _dct_read(img, n_bits, key)
    return _dwt_read(img, n_bits, key)


@dataclass
class BaselineDetection:
    r: float
    detected: bool
    threshold: float


def baseline_detect(img, kind, payload, strength: float | None = None, key: int = 0,
                    T: float = DEFAULT_THRESHOLD) -> BaselineDetection:
    """Blind detection; ``strength`` is accepted for interface symmetry and not needed."""
    vals = baseline_read(img, kind, len(payload), key)
    r = normalized_correlation(vals, payload)
    return BaselineDetection(r, r > T, T)


__all__ = [
    "BaselineDetection", "BaselineKind", "DEFAULT_STRENGTH", "PAYLOAD_BITS",
    "baseline_detect", "baseline_embed", "baseline_read", "make_payload",
    "normalized_correlation",
]
