"""Seeded image attacks: additive noise, iterated JPEG with perturbations, crop + inpaint."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import cv2
import numpy as np
from scipy import ndimage

from .errors import ParamOutOfRange
from .imaging import DEFAULT_CODEC, Codec, gray_to_rgb, to_gray

KINDS = ("gaussian_noise", "jpeg_rounds", "crop_inpaint", "blur", "scale", "rotate", "composite")

NOISE_SIGMA = (0.03, 0.08)
NOISE_INTENSITY = (0.3, 0.5)
JPEG_ROUNDS = (4, 7)
JPEG_QUALITY = (1, 10)
CROP_AREA = (0.40, 0.60)
CROP_REGIONS = (7, 10)
CROP_TOLERANCE = 0.02
SCALE_RANGE = (0.9, 1.1)
ROTATE_DEG = 3.0
INPAINT_TOL = 1e-4
INPAINT_MAX_ITER = 2000


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check(name, value, lo, hi, allow_zero=False):
    if allow_zero and value == 0:
        return
    if not lo <= value <= hi:
        raise ParamOutOfRange(f"{name}={value} outside [{lo}, {hi}]")


# --------------------------------------------------------------------------
# primitives


def blur(img, ksize: int = 3) -> np.ndarray:
    out = cv2.GaussianBlur(np.asarray(img, dtype=np.float64), (ksize, ksize), 0,
                           borderType=cv2.BORDER_REFLECT)
    return np.clip(out, 0.0, 1.0)


def scale(img, factor: float) -> np.ndarray:
    """Bilinear resize by ``factor`` and back, so the output keeps the input size."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    sh, sw = max(1, int(round(h * factor))), max(1, int(round(w * factor)))
    small = cv2.resize(img, (sw, sh), interpolation=cv2.INTER_LINEAR)
    back = cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR)
    return np.clip(back, 0.0, 1.0)


def rotate(img, degrees: float) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    m = cv2.getRotationMatrix2D(((w - 1) / 2.0, (h - 1) / 2.0), degrees, 1.0)
    out = cv2.warpAffine(img, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REFLECT)
    return np.clip(out, 0.0, 1.0)


def _colour_roundtrip(img) -> np.ndarray:
    if img.ndim == 3:
        return gray_to_rgb(to_gray(img))
    return img


# --------------------------------------------------------------------------
# the three attack families


def gaussian_noise(img, sigma: float, intensity: float, seed=None) -> np.ndarray:
    """``clamp(I + intensity * n)`` with ``n ~ N(0, sigma^2)`` per pixel."""
    _check("sigma", sigma, *NOISE_SIGMA)
    _check("intensity", intensity, *NOISE_INTENSITY, allow_zero=True)
    img = np.asarray(img, dtype=np.float64)
    if intensity == 0:
        return img.copy()
    n = _rng(seed).normal(0.0, sigma, size=img.shape)
    return np.clip(img + intensity * n, 0.0, 1.0)


def jpeg_rounds(img, rounds: int, quality, perturb: bool = True, seed=None,
                codec: Codec = DEFAULT_CODEC) -> np.ndarray:
    """Repeated baseline-JPEG round trips.

    ``quality`` is one value for every round or a sequence with one entry per
    round. With ``perturb`` each round first applies, independently with
    probability 1/2, a random rescale, a random small rotation and a 3x3
    Gaussian blur, plus an RGB -> gray -> RGB conversion for colour input.
    """
    _check("rounds", rounds, *JPEG_ROUNDS, allow_zero=True)
    quals = [int(quality)] * rounds if np.isscalar(quality) else [int(q) for q in quality]
    if len(quals) != rounds:
        raise ParamOutOfRange("need one quality per round")
    for q in quals:
        _check("quality", q, *JPEG_QUALITY)
    rng = _rng(seed)
    out = np.asarray(img, dtype=np.float64).copy()
    for q in quals:
        if perturb:
            if rng.random() < 0.5:
                out = scale(out, rng.uniform(*SCALE_RANGE))
            if rng.random() < 0.5:
                out = rotate(out, rng.uniform(-ROTATE_DEG, ROTATE_DEG))
            if rng.random() < 0.5:
                out = blur(out)
            out = _colour_roundtrip(out)
        out = codec.jpeg_roundtrip(out, q)
    return out


@dataclass
class CropMask:
    mask: np.ndarray
    rects: list[tuple[int, int, int, int]]  # (y0, x0, y1, x1), exclusive ends

    @property
    def coverage(self) -> float:
        return float(self.mask.mean())


def _paint(shape, rects) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    for y0, x0, y1, x1 in rects:
        m[y0:y1, x0:x1] = True
    return m


def crop_mask(shape, area_fraction: float, regions: int, seed=None) -> CropMask:
    """Union of ``regions`` random rectangles covering ``area_fraction`` (+/- 2%) of the image.

    Rectangles start at an equal share of the target area with random aspect
    ratios and positions; single rectangles then grow or shrink one pixel per
    side until the union coverage lands inside the tolerance band.
    """
    h, w = shape[:2]
    rng = _rng(seed)
    share = area_fraction * h * w / regions
    rects = []
    for _ in range(regions):
        aspect = math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
        rh = int(np.clip(round(math.sqrt(share * aspect)), 1, h))
        rw = int(np.clip(round(math.sqrt(share / aspect)), 1, w))
        y0 = int(rng.integers(0, h - rh + 1))
        x0 = int(rng.integers(0, w - rw + 1))
        rects.append([y0, x0, y0 + rh, x0 + rw])
    mask = _paint((h, w), rects)
    for _ in range(4 * (h + w)):
        cov = mask.mean()
        if abs(cov - area_fraction) <= CROP_TOLERANCE:
            break
        i = int(rng.integers(regions))
        y0, x0, y1, x1 = rects[i]
        if cov < area_fraction:
            rects[i] = [max(0, y0 - 1), max(0, x0 - 1), min(h, y1 + 1), min(w, x1 + 1)]
        elif y1 - y0 > 2 and x1 - x0 > 2:
            rects[i] = [y0 + 1, x0 + 1, y1 - 1, x1 - 1]
        mask = _paint((h, w), rects)
    return CropMask(mask, [tuple(r) for r in rects])


def _boundary(mask: np.ndarray) -> np.ndarray:
    return ndimage.binary_dilation(mask, iterations=1) & ~mask


def diffusion_inpaint(img, mask, tol: float = INPAINT_TOL, max_iter: int = INPAINT_MAX_ITER) -> np.ndarray:
    """Fill ``mask`` with the discrete harmonic interpolant of the surrounding pixels.

    Jacobi neighbour averaging (known pixels held fixed, replicate borders)
    runs until the largest per-pixel update falls below ``tol``. A coarse
    solve on the 2x-downsampled problem provides the starting guess.
    """
    img = np.asarray(img, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if img.ndim == 3:
        return np.stack([diffusion_inpaint(img[..., c], mask, tol, max_iter)
                         for c in range(img.shape[2])], axis=-1)
    if not mask.any():
        return img.copy()
    ring = _boundary(mask)
    if not ring.any():
        raise ParamOutOfRange("cannot inpaint: no known pixels")
    lo, hi = img[ring].min(), img[ring].max()
    u = img.copy()
    u[mask] = _coarse_guess(img, mask)
    # clamping the start to the boundary range makes the iterates obey the maximum principle
    u[mask] = np.clip(u[mask], lo, hi)
    for _ in range(max_iter):
        p = np.pad(u, 1, mode="edge")
        avg = 0.25 * (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:])
        change = np.abs(avg[mask] - u[mask]).max()
        u[mask] = avg[mask]
        if change < tol:
            break
    return u


def _coarse_guess(img, mask) -> np.ndarray:
    h, w = img.shape
    if min(h, w) < 16:
        known = img[~mask]
        return np.full(int(mask.sum()), known.mean() if known.size else 0.5)
    h2, w2 = h // 2 * 2, w // 2 * 2
    known = (~mask[:h2, :w2]).astype(np.float64)
    vals = np.where(mask, 0.0, img)[:h2, :w2]
    ksum = known.reshape(h2 // 2, 2, w2 // 2, 2).sum(axis=(1, 3))
    vsum = vals.reshape(h2 // 2, 2, w2 // 2, 2).sum(axis=(1, 3))
    cmask = ksum == 0
    cimg = np.where(cmask, 0.0, vsum / np.maximum(ksum, 1.0))
    if cmask.any():
        cimg = diffusion_inpaint(cimg, cmask, tol=1e-3, max_iter=500)
    up = cv2.resize(cimg, (w2, h2), interpolation=cv2.INTER_LINEAR)
    if (h2, w2) != (h, w):
        up = np.pad(up, ((0, h - h2), (0, w - w2)), mode="edge")
    return up[mask]


def crop_inpaint(img, area_fraction: float, regions: int, seed=None,
                 method: str = "diffusion") -> np.ndarray:
    """Remove random rectangles, diffuse the surroundings into them, then median and Gaussian blur."""
    _check("area_fraction", area_fraction, *CROP_AREA, allow_zero=True)
    _check("regions", regions, *CROP_REGIONS)
    if method != "diffusion":
        raise ParamOutOfRange(f"unknown inpainting method {method!r}")
    img = np.asarray(img, dtype=np.float64)
    if area_fraction == 0:
        return img.copy()
    cm = crop_mask(img.shape, area_fraction, regions, seed)
    filled = diffusion_inpaint(img, cm.mask)
    u8 = np.round(np.clip(filled, 0.0, 1.0) * 255.0).astype(np.uint8)
    med = cv2.medianBlur(u8, 3).astype(np.float64) / 255.0
    return blur(med)


# --------------------------------------------------------------------------
# specs and presets


@dataclass
class AttackSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParamOutOfRange(f"unknown attack kind {self.kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "composite":
            steps = [s.to_dict() if isinstance(s, AttackSpec) else s for s in self.params.get("steps", [])]
            return {"kind": self.kind, "params": {"steps": steps}, "seed": self.seed}
        return {"kind": self.kind, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "AttackSpec":
        params = dict(d.get("params", {}))
        if d["kind"] == "composite":
            params["steps"] = [cls.from_dict(s) for s in params.get("steps", [])]
        return cls(d["kind"], params, int(d.get("seed", 0)))


def apply_attack(img, spec: AttackSpec, codec: Codec = DEFAULT_CODEC) -> np.ndarray:
    p = spec.params
    if spec.kind == "gaussian_noise":
        return gaussian_noise(img, p["sigma"], p["intensity"], spec.seed)
    if spec.kind == "jpeg_rounds":
        return jpeg_rounds(img, p["rounds"], p["quality"], p.get("perturb", True), spec.seed, codec)
    if spec.kind == "crop_inpaint":
        return crop_inpaint(img, p["area_fraction"], p["regions"], spec.seed, p.get("method", "diffusion"))
    if spec.kind == "blur":
        return blur(img, int(p.get("ksize", 3)))
    if spec.kind == "scale":
        return scale(img, float(p["factor"]))
    if spec.kind == "rotate":
        return rotate(img, float(p["degrees"]))
    out = np.asarray(img, dtype=np.float64)
    for step in p.get("steps", []):
        step = step if isinstance(step, AttackSpec) else AttackSpec.from_dict(step)
        out = apply_attack(out, step, codec)
    return out


PRESETS = ("gaussian_noise", "jpeg_rounds", "crop_inpaint")


def sample_preset(name: str, rng: np.random.Generator) -> AttackSpec:
    """Draw one attack instance from the protocol's parameter ranges."""
    seed = int(rng.integers(0, 2 ** 63 - 1))
    if name == "gaussian_noise":
        params = {"sigma": float(rng.uniform(*NOISE_SIGMA)),
                  "intensity": float(rng.uniform(*NOISE_INTENSITY))}
    elif name == "jpeg_rounds":
        rounds = int(rng.integers(JPEG_ROUNDS[0], JPEG_ROUNDS[1] + 1))
        params = {"rounds": rounds,
                  "quality": [int(q) for q in rng.integers(JPEG_QUALITY[0], JPEG_QUALITY[1] + 1, rounds)],
                  "perturb": True}
    elif name == "crop_inpaint":
        params = {"area_fraction": float(rng.uniform(*CROP_AREA)),
                  "regions": int(rng.integers(CROP_REGIONS[0], CROP_REGIONS[1] + 1))}
    else:
        raise ParamOutOfRange(f"no preset for {name!r}")
    return AttackSpec(name, params, seed)


def cell_rng(master_seed: int, image_id: int, iteration: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one (image, iteration) cell; identical in serial and parallel runs."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, image_id, iteration, stream]))
