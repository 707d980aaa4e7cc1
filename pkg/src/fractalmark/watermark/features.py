"""Feature watermark matrix and the multiscale feature vector used for token IDs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInput, ParamOutOfRange
from ..fractal import (DEFAULT_NUM_SCALES, CapacityResult, capacity_dimension,
                       default_box_scales, occupied_boxes, ols_fit)
from ..imaging import scharr_edges
from ..transforms import haar_dwt2
from ..turbulence import TurbulenceFeatures, turbulence_stats


@dataclass(frozen=True)
class WatermarkMatrix:
    """``[[D, mu], [sigma, 0]]`` with mu and sigma in 8-bit power units."""

    D: float
    mu: float
    sigma: float

    def __post_init__(self):
        for name in ("D", "mu", "sigma"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.D, self.mu], [self.sigma, 0.0]])

    def flatten(self) -> np.ndarray:
        return self.matrix.ravel()

    @classmethod
    def from_matrix(cls, m) -> "WatermarkMatrix":
        m = np.asarray(m, dtype=np.float64).reshape(2, 2)
        if m[1, 1] != 0.0:
            raise ValueError("entry (1, 1) of a watermark matrix must be 0")
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]))

    def to_list(self) -> list[list[float]]:
        return self.matrix.tolist()


@dataclass
class ImageFeatures:
    watermark: WatermarkMatrix
    capacity: CapacityResult
    turbulence: TurbulenceFeatures


def image_features(gray) -> ImageFeatures:
    gray = np.asarray(gray, dtype=np.float64)
    cap = capacity_dimension(gray)
    turb = turbulence_stats(gray, levels=1)
    wm = WatermarkMatrix(D=cap.dimension, mu=turb.mean_power_255, sigma=turb.std_power_255)
    return ImageFeatures(wm, cap, turb)


def build_watermark(gray) -> WatermarkMatrix:
    """Watermark matrix from box-counting dimension and level-1 turbulence.

    The sigma entry is the standard deviation of the combined detail power,
    so both statistics share the ``255**2`` unit of the mean.
    """
    return image_features(gray).watermark


def _box_slope(mask, scales) -> float:
    counts = np.array([occupied_boxes(mask, e) for e in scales], dtype=np.float64)
    if counts.min() <= 0 or len(scales) < 2:
        return 0.0
    return ols_fit(np.log(1.0 / scales), np.log(counts)).slope


def multiscale_features(gray, S: int = 3, b: int = 8) -> np.ndarray:
    """Quantized per-scale summary vector.

    For each Haar level ``s = 1..S`` the vector holds the three detail-band
    mean powers, the box-count slope over the ``s``-th slice of the box
    scales, and the mean and standard deviation of the level's combined power.
    The concatenation is z-normalized with its own statistics, clipped to
    ``[-4, 4]`` and quantized uniformly to ``b`` bits.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if S < 1:
        raise ParamOutOfRange("S must be >= 1")
    if not 1 <= b <= 16:
        raise ParamOutOfRange("b must be in 1..16")
    if np.ptp(gray) == 0.0:
        raise DegenerateInput("constant image has no features")
    edges = scharr_edges(gray)
    scales = default_box_scales(gray.shape, DEFAULT_NUM_SCALES)
    chunks = np.array_split(scales, S)
    pyr = haar_dwt2(gray, S)
    parts = []
    for s in range(S):
        lvl = pyr.levels[s]
        lh, hl, hh = lvl.LH ** 2, lvl.HL ** 2, lvl.HH ** 2
        comb = lh + hl + hh
        parts.extend([lh.mean(), hl.mean(), hh.mean(),
                      _box_slope(edges.binary, chunks[s]),
                      comb.mean(), comb.std()])
    v = np.asarray(parts, dtype=np.float64)
    sd = v.std()
    if sd == 0.0 or not np.isfinite(sd):
        raise DegenerateInput("feature vector has zero spread")
    z = np.clip((v - v.mean()) / sd, -4.0, 4.0)
    levels = 2 ** b - 1
    return np.round((z + 4.0) / 8.0 * levels).astype(np.int64)
