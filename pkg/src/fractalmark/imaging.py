"""Image representation, colour conversion, edge operators and quality metrics.

Images are plain ``numpy`` float64 arrays with intensities in ``[0, 1]``:
shape ``(H, W)`` for grayscale and ``(H, W, 3)`` for RGB. 8-bit I/O quantizes
with ``round(v * 255)``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import CodecFailure, DimensionMismatch, ImageTooSmall, IoFailure

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
DEFAULT_EDGE_THRESHOLD = 0.1

SCHARR_X = np.array([[-3.0, 0.0, 3.0],
                     [-10.0, 0.0, 10.0],
                     [-3.0, 0.0, 3.0]])
SCHARR_Y = SCHARR_X.T.copy()


def check_image(img) -> np.ndarray:
    """Validate and return ``img`` as a float64 array in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] not in (1, 3)):
        raise ValueError(f"expected (H, W) or (H, W, 1|3) array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty image")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("intensities must lie in [0, 1]")
    return arr


def to_gray(img) -> np.ndarray:
    """Luma conversion ``0.299 R + 0.587 G + 0.114 B``; 1-channel input passes through."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.shape[2] == 1:
        return arr[:, :, 0]
    # integer weights over 1000 keep white exactly white (the float weights sum to 1 - 1e-16)
    gray = (299.0 * arr[:, :, 0] + 587.0 * arr[:, :, 1] + 114.0 * arr[:, :, 2]) / 1000.0
    return np.clip(gray, 0.0, 1.0)


def gray_to_rgb(gray) -> np.ndarray:
    return np.repeat(np.asarray(gray, dtype=np.float64)[:, :, None], 3, axis=2)


def quantize8(img) -> np.ndarray:
    """Round to the 8-bit grid and return as float in [0, 1]."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def to_uint8(img) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(arr) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64) / 255.0


@dataclass(frozen=True)
class EdgeMap:
    magnitude: np.ndarray
    binary: np.ndarray
    threshold: float

    @property
    def shape(self):
        return self.magnitude.shape


def scharr_gradients(gray) -> tuple[np.ndarray, np.ndarray]:
    gray = np.asarray(gray, dtype=np.float64)
    gx = ndimage.correlate(gray, SCHARR_X, mode="nearest")
    gy = ndimage.correlate(gray, SCHARR_Y, mode="nearest")
    return gx, gy


def scharr_edges(gray, threshold: float = DEFAULT_EDGE_THRESHOLD) -> EdgeMap:
    """Scharr gradient magnitude with a fraction-of-max binary mask.

    Borders are replicate-padded, so a constant image yields an all-zero map
    and an empty mask.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ValueError("scharr_edges expects a grayscale image")
    if min(gray.shape) < 3:
        raise ImageTooSmall(f"need at least 3x3 pixels, got {gray.shape}")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be a fraction in (0, 1)")
    gx, gy = scharr_gradients(gray)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak <= 0.0:
        binary = np.zeros(mag.shape, dtype=bool)
    else:
        binary = mag >= threshold * peak
    return EdgeMap(magnitude=mag, binary=binary, threshold=threshold)


def mse(ref, test) -> float:
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise DimensionMismatch(f"{ref.shape} vs {test.shape}")
    return float(np.mean((ref - test) ** 2))


def psnr(ref, test) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] intensities; ``inf`` when identical."""
    err = mse(ref, test)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


@dataclass(frozen=True)
class BlockGrid:
    """Non-overlapping ceil-tiling of an image.

    ``blocks`` has shape ``(rows, cols, block, block)``; ``coverage[r, c]`` holds
    the number of valid (unpadded) pixel rows and columns of each block.
    """

    blocks: np.ndarray
    coverage: np.ndarray
    shape: tuple[int, int]
    block: int

    def __len__(self):
        return self.blocks.shape[0] * self.blocks.shape[1]

    def assemble(self, blocks=None) -> np.ndarray:
        blocks = self.blocks if blocks is None else blocks
        rows, cols, b, _ = blocks.shape
        full = blocks.transpose(0, 2, 1, 3).reshape(rows * b, cols * b)
        return full[: self.shape[0], : self.shape[1]].copy()


def partition_blocks(gray, block: int) -> BlockGrid:
    gray = np.asarray(gray, dtype=np.float64)
    if block < 2:
        raise ValueError("block must be >= 2")
    h, w = gray.shape
    rows, cols = -(-h // block), -(-w // block)
    padded = np.zeros((rows * block, cols * block))
    padded[:h, :w] = gray
    blocks = padded.reshape(rows, block, cols, block).transpose(0, 2, 1, 3).copy()
    cov = np.empty((rows, cols, 2), dtype=np.int64)
    cov[:, :, 0] = np.minimum(block, h - np.arange(rows) * block)[:, None]
    cov[:, :, 1] = np.minimum(block, w - np.arange(cols) * block)[None, :]
    return BlockGrid(blocks=blocks, coverage=cov, shape=(h, w), block=block)


def resize_bilinear(img, shape) -> np.ndarray:
    import cv2

    h, w = shape
    out = cv2.resize(np.asarray(img, dtype=np.float64), (w, h), interpolation=cv2.INTER_LINEAR)
    return np.clip(out, 0.0, 1.0)


# --------------------------------------------------------------------------
# Codec boundary


class Codec(Protocol):
    def read(self, path) -> np.ndarray: ...

    def write_png(self, img, path) -> None: ...

    def jpeg_roundtrip(self, img, quality: int) -> np.ndarray: ...


class PillowCodec:
    """PNG/JPEG codec backed by Pillow (libjpeg baseline encoder)."""

    def read(self, path) -> np.ndarray:
        path = Path(path)
        try:
            with Image.open(path) as im:
                if im.mode in ("L", "I;16", "I"):
                    arr = np.asarray(im.convert("L"))
                else:
                    arr = np.asarray(im.convert("RGB"))
        except (OSError, ValueError) as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        return from_uint8(arr)

    def write_png(self, img, path) -> None:
        arr = to_uint8(img)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        try:
            Image.fromarray(arr).save(Path(path), format="PNG")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    def encode_jpeg(self, img, quality: int) -> bytes:
        if not 1 <= int(quality) <= 100:
            raise CodecFailure(f"JPEG quality {quality} outside 1..100")
        arr = to_uint8(img)
        buf = io.BytesIO()
        try:
            Image.fromarray(arr).save(buf, format="JPEG", quality=int(quality))
        except OSError as exc:
            raise CodecFailure(str(exc)) from exc
        return buf.getvalue()

    def decode(self, data: bytes) -> np.ndarray:
        try:
            with Image.open(io.BytesIO(data)) as im:
                return from_uint8(np.asarray(im))
        except OSError as exc:
            raise CodecFailure(str(exc)) from exc

    def jpeg_roundtrip(self, img, quality: int) -> np.ndarray:
        return self.decode(self.encode_jpeg(img, quality))


DEFAULT_CODEC = PillowCodec()


def read_image(path, codec: Codec = DEFAULT_CODEC) -> np.ndarray:
    return codec.read(path)


def write_png(img, path, codec: Codec = DEFAULT_CODEC) -> None:
    codec.write_png(img, path)
