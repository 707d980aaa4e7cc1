"""Adaptive mid-frequency DCT embedding, semi-blind extraction and correlation detection."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import (DegenerateInput, ParamOutOfRange, ReceiptMismatch,
                      TooFewBlocks)
from ..imaging import partition_blocks, scharr_edges
from ..transforms import blockwise_idct
from .chaos import ChaoticBits, LorenzConfig, lorenz_bits
from .features import WatermarkMatrix, build_watermark

DEFAULT_ALPHA = 4.0 / 255.0
DEFAULT_THRESHOLD = 0.95
DEFAULT_BAND = ((1, 2), (2, 1), (2, 2), (3, 1))
RECEIPT_VERSION = "fractalmark-receipt/1"


@dataclass(frozen=True)
class EmbedConfig:
    alpha_base: float = DEFAULT_ALPHA
    gamma: float = 0.5
    block: int = 8
    band: tuple = DEFAULT_BAND
    local_window: int = 33
    quant_bits: int = 8
    n_bits: int = 1024
    assign_seed: int = 0
    chaos: LorenzConfig = field(default_factory=LorenzConfig)

    def __post_init__(self):
        object.__setattr__(self, "band", tuple(tuple(int(v) for v in s) for s in self.band))
        if self.alpha_base < 0:
            raise ParamOutOfRange("alpha_base must be >= 0")
        if not 0.0 <= self.gamma <= 2.0:
            raise ParamOutOfRange("gamma must lie in [0, 2]")
        if not 4 <= self.quant_bits <= 16:
            raise ParamOutOfRange("quant_bits must lie in [4, 16]")
        if self.block < 4:
            raise ParamOutOfRange("block must be >= 4")
        if len(self.band) != 4:
            raise ParamOutOfRange("band needs exactly 4 slots, one per matrix entry")
        top = self.block - 1
        for u, v in self.band:
            if not (0 <= u <= top and 0 <= v <= top):
                raise ParamOutOfRange(f"band slot {(u, v)} outside the block")
            if (u, v) in ((0, 0), (top, top)):
                raise ParamOutOfRange("band must exclude DC and the highest-frequency corner")
        if self.local_window < 17:
            raise ParamOutOfRange("local_window must be >= 17")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band"] = [list(s) for s in self.band]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EmbedConfig":
        d = dict(d)
        chaos = LorenzConfig(**d.pop("chaos", {}))
        return cls(chaos=chaos, **d)


# --------------------------------------------------------------------------
# local strength


def _window_dimensions(mask: np.ndarray, centres_y, centres_x, k: int) -> np.ndarray:
    """Dyadic box-count slope of the ``k x k`` window centred on each block centre.

    Returns NaN where the window holds no edge pixel.
    """
    half = k // 2
    padded = np.pad(mask.astype(np.int64), half, mode="reflect")
    ii = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = padded.cumsum(0).cumsum(1)
    # top-left of each window in padded coordinates
    oy = np.asarray(centres_y)[:, None]
    ox = np.asarray(centres_x)[None, :]
    sizes = [2 ** j for j in range(1, int(math.log2(k)) + 1) if 2 ** j < k]
    logN = []
    for s in sizes:
        n = k // s
        offs = np.arange(n) * s
        y0 = oy[:, :, None, None] + offs[None, None, :, None]
        x0 = ox[:, :, None, None] + offs[None, None, None, :]
        box = ii[y0 + s, x0 + s] - ii[y0, x0 + s] - ii[y0 + s, x0] + ii[y0, x0]
        logN.append((box > 0).sum(axis=(2, 3)))
    counts = np.stack(logN, axis=-1).astype(np.float64)
    x = np.log(1.0 / np.asarray(sizes, dtype=np.float64))
    empty = counts[..., 0] == 0
    y = np.log(np.maximum(counts, 1.0))
    xm = x.mean()
    slope = ((y - y.mean(axis=-1, keepdims=True)) * (x - xm)).sum(-1) / ((x - xm) ** 2).sum()
    slope[empty] = np.nan
    return slope


def local_dimensions(gray, cfg: EmbedConfig = EmbedConfig()) -> np.ndarray:
    gray = np.asarray(gray, dtype=np.float64)
    edges = scharr_edges(gray).binary
    h, w = gray.shape
    b = cfg.block
    rows, cols = -(-h // b), -(-w // b)
    # window's top-left in padded coordinates equals the block centre in image coordinates
    cy = np.minimum(np.arange(rows) * b + b // 2, h - 1)
    cx = np.minimum(np.arange(cols) * b + b // 2, w - 1)
    return _window_dimensions(edges, cy, cx, cfg.local_window)


def local_strength(gray, cfg: EmbedConfig = EmbedConfig()) -> np.ndarray:
    """Per-block embedding strength ``alpha_base * (1 + gamma * normalized D_local)``."""
    dims = local_dimensions(gray, cfg)
    valid = np.isfinite(dims)
    ratio = np.zeros(dims.shape)
    if valid.any():
        lo, hi = dims[valid].min(), dims[valid].max()
        if hi > lo:
            ratio = np.where(valid, (np.where(valid, dims, lo) - lo) / (hi - lo), 0.0)
    return cfg.alpha_base * (1.0 + cfg.gamma * ratio)


# --------------------------------------------------------------------------
# embedding


@dataclass
class EmbedReceipt:
    original: WatermarkMatrix
    scale: float
    assign_seed: int
    config: dict
    strength_sha256: str
    shape: tuple
    version: str = RECEIPT_VERSION

    def body(self) -> dict:
        return {
            "version": self.version,
            "original": self.original.to_list(),
            "scale": self.scale,
            "assign_seed": self.assign_seed,
            "config": self.config,
            "strength_sha256": self.strength_sha256,
            "shape": list(self.shape),
        }

    def digest(self) -> str:
        blob = json.dumps(self.body(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self) -> str:
        d = self.body()
        d["digest"] = self.digest()
        return json.dumps(d, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EmbedReceipt":
        try:
            d = json.loads(text)
            rec = cls(
                original=WatermarkMatrix.from_matrix(d["original"]),
                scale=float(d["scale"]),
                assign_seed=int(d["assign_seed"]),
                config=d["config"],
                strength_sha256=str(d["strength_sha256"]),
                shape=tuple(int(v) for v in d["shape"]),
                version=d.get("version", RECEIPT_VERSION),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ReceiptMismatch(f"malformed receipt: {exc}") from exc
        if "digest" in d and d["digest"] != rec.digest():
            raise ReceiptMismatch("receipt digest does not match its contents")
        return rec

    def check(self, gray, cfg: EmbedConfig) -> None:
        shape = tuple(np.asarray(gray).shape[:2])
        if shape != tuple(self.shape):
            raise ReceiptMismatch(f"image shape {shape} differs from receipt {tuple(self.shape)}")
        if cfg.to_dict() != self.config:
            raise ReceiptMismatch("embedding config differs from the receipt")


def strength_digest(strength: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(strength, dtype="<f8").tobytes()).hexdigest()


def _slot_signs(bits: ChaoticBits, n_cells: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(bits), size=n_cells)
    return bits.signs[idx]


@dataclass
class EmbedPlan:
    """Linear embedding ``image + t * delta`` before clamping; ``t = 1`` is the configured strength."""

    delta: np.ndarray
    strength: np.ndarray
    normalized: np.ndarray
    scale: float


def embedding_plan(gray, W: WatermarkMatrix, bits: ChaoticBits, cfg: EmbedConfig) -> EmbedPlan:
    gray = np.asarray(gray, dtype=np.float64)
    grid = partition_blocks(gray, cfg.block)
    rows, cols = grid.blocks.shape[:2]
    if rows * cols < 4:
        raise TooFewBlocks(f"image admits {rows * cols} blocks of {cfg.block}px, need >= 4")
    m = W.matrix
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        raise DegenerateInput("watermark matrix is all zeros")
    what = (m / scale).ravel()
    strength = local_strength(gray, cfg)
    signs = _slot_signs(bits, rows * cols * 4, cfg.assign_seed).reshape(rows, cols, 4)
    coeffs = np.zeros_like(grid.blocks)
    for j, (u, v) in enumerate(cfg.band):
        coeffs[:, :, u, v] = strength * what[j] * signs[:, :, j]
    delta = grid.assemble(blockwise_idct(coeffs))
    return EmbedPlan(delta=delta, strength=strength, normalized=what.reshape(2, 2), scale=scale)


def apply_plan(gray, plan: EmbedPlan, t: float = 1.0) -> np.ndarray:
    return np.clip(np.asarray(gray, dtype=np.float64) + t * plan.delta, 0.0, 1.0)


def embed(gray, W: WatermarkMatrix | None = None, bits: ChaoticBits | None = None,
          cfg: EmbedConfig = EmbedConfig()) -> tuple[np.ndarray, EmbedReceipt]:
    """Block-DCT embedding of the normalized watermark with chaotic sign spreading.

    Returns the clamped watermarked image and the receipt needed for
    verification. ``W`` and ``bits`` default to the image's own features and
    the configured Lorenz sequence.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if W is None:
        W = build_watermark(gray)
    if bits is None:
        bits = lorenz_bits(cfg.chaos, cfg.n_bits)
    plan = embedding_plan(gray, W, bits, cfg)
    out = apply_plan(gray, plan)
    receipt = EmbedReceipt(
        original=W,
        scale=plan.scale,
        assign_seed=cfg.assign_seed,
        config=cfg.to_dict(),
        strength_sha256=strength_digest(plan.strength),
        shape=gray.shape,
    )
    return out, receipt


def extract(gray, receipt: EmbedReceipt, cfg: EmbedConfig = EmbedConfig()) -> WatermarkMatrix:
    """Semi-blind extraction: recompute the feature matrix from the suspect image."""
    receipt.check(gray, cfg)
    return build_watermark(gray)


# --------------------------------------------------------------------------
# detection


@dataclass
class DetectionResult:
    r: float
    detected: bool
    threshold: float
    extracted: WatermarkMatrix | None = None
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "detected": self.detected,
            "threshold": self.threshold,
            "extracted": None if self.extracted is None else self.extracted.to_list(),
            "diagnostic": self.diagnostic,
        }


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    da, db = a - a.mean(), b - b.mean()
    den = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if den == 0.0:
        return math.nan
    return max(-1.0, min(1.0, float(np.dot(da, db)) / den))


def detect(original: WatermarkMatrix, extracted: WatermarkMatrix,
           T: float = DEFAULT_THRESHOLD) -> DetectionResult:
    a, b = original.flatten(), extracted.flatten()
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("watermark matrices must be finite")
    r = pearson(a, b)
    if math.isnan(r):
        return DetectionResult(math.nan, False, T, extracted, "ZeroVariance")
    return DetectionResult(r, r > T, T, extracted)


def verify(gray, receipt: EmbedReceipt, cfg: EmbedConfig = EmbedConfig(),
           T: float = DEFAULT_THRESHOLD) -> DetectionResult:
    """Extract and detect in one call; a degenerate suspect image counts as not detected."""
    try:
        ext = extract(gray, receipt, cfg)
    except DegenerateInput:
        return DetectionResult(math.nan, False, T, None, "DegenerateInput")
    return detect(receipt.original, ext, T)
