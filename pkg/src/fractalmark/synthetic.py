"""Deterministic synthetic images: fractal oracles, drip-style artworks, noise controls."""
from __future__ import annotations

import math

import numpy as np

from .imaging import to_gray

SIERPINSKI_DIMENSION = math.log(8) / math.log(3)


def sierpinski_carpet(depth: int) -> np.ndarray:
    """Boolean carpet of side ``3**depth``; True marks the filled set."""
    carpet = np.ones((1, 1), dtype=bool)
    for _ in range(depth):
        n = carpet.shape[0]
        nxt = np.tile(carpet, (3, 3))
        nxt[n:2 * n, n:2 * n] = False
        carpet = nxt
    return carpet


def binomial_cascade(p: float, generations: int) -> np.ndarray:
    """1D multiplicative cascade measure on ``2**generations`` cells (sums to 1)."""
    m = np.ones(1)
    for _ in range(generations):
        m = np.stack([m * p, m * (1.0 - p)], axis=1).ravel()
    return m


def cascade_tau(q, p: float):
    q = np.asarray(q, dtype=np.float64)
    return -np.log2(p ** q + (1.0 - p) ** q)


def cascade_dq(q, p: float):
    """Analytic generalized dimensions of the binomial cascade (q=1 via the entropy limit)."""
    q = np.asarray(q, dtype=np.float64)
    out = np.empty(q.shape)
    near1 = np.abs(q - 1.0) < 1e-9
    out[~near1] = cascade_tau(q[~near1], p) / (q[~near1] - 1.0)
    out[near1] = -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
    return out


def cascade_alpha_range(p: float) -> tuple[float, float]:
    lo, hi = sorted((-math.log2(p), -math.log2(1.0 - p)))
    return lo, hi


def white_noise(shape, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random(shape)


def negative_control(shape, rng: np.random.Generator) -> np.ndarray:
    """Random unwatermarked image: i.i.d. uniform or clipped Gaussian noise."""
    if rng.random() < 0.5:
        img = rng.random(shape)
    else:
        img = rng.normal(0.5, rng.uniform(0.1, 0.3), size=shape)
    return np.clip(img, 0.0, 1.0)


def _smooth_path(rng, shape, n_points, step):
    h, w = shape
    pos = np.array([rng.uniform(0, w), rng.uniform(0, h)])
    heading = rng.uniform(0, 2 * math.pi)
    turn = 0.0
    pts = np.empty((n_points, 2))
    for i in range(n_points):
        turn = 0.85 * turn + rng.normal(0.0, 0.12)
        heading += turn
        pos = pos + step * np.array([math.cos(heading), math.sin(heading)])
        # bounce off the canvas edges
        for ax, lim in ((0, w), (1, h)):
            if pos[ax] < 0 or pos[ax] >= lim:
                pos[ax] = min(max(pos[ax], 0.0), lim - 1.0)
                heading = math.pi - heading if ax == 0 else -heading
        pts[i] = pos
    return pts


_PALETTE = np.array([
    [0.05, 0.05, 0.05],   # black enamel
    [0.95, 0.95, 0.93],   # white
    [0.80, 0.62, 0.20],   # ochre
    [0.55, 0.12, 0.10],   # oxblood
    [0.20, 0.28, 0.45],   # slate blue
    [0.70, 0.70, 0.72],   # aluminium
])


def drip_painting(size: int = 256, seed: int = 0, layers: int = 5) -> np.ndarray:
    """RGB drip-style abstract artwork: layered poured trails and splatter on canvas."""
    import cv2

    rng = np.random.default_rng(seed)
    h = w = size
    canvas_tone = np.array([0.86, 0.80, 0.68]) * rng.uniform(0.9, 1.05)
    img = np.empty((h, w, 3), dtype=np.float32)
    img[:] = np.clip(canvas_tone, 0, 1)
    scale = size / 256.0
    for layer in range(layers):
        colour = _PALETTE[rng.integers(len(_PALETTE))]
        n_trails = int(rng.integers(3, 7))
        for _ in range(n_trails):
            pts = _smooth_path(rng, (h, w), int(rng.integers(60, 200) * scale), 3.0 * scale)
            thickness = int(max(1, round(rng.choice([1, 1, 2, 2, 3, 4, 6]) * scale)))
            c = tuple(float(v) for v in np.clip(colour + rng.normal(0, 0.03, 3), 0, 1))
            cv2.polylines(img, [np.round(pts).astype(np.int32)], False, c, thickness, cv2.LINE_AA)
        n_drops = int(rng.integers(20, 60) * scale * scale)
        for _ in range(n_drops):
            centre = (int(rng.integers(0, w)), int(rng.integers(0, h)))
            radius = int(max(1, round(rng.exponential(1.5) * scale)))
            c = tuple(float(v) for v in colour)
            cv2.circle(img, centre, radius, c, -1, cv2.LINE_AA)
    return np.clip(img.astype(np.float64), 0.0, 1.0)


def desk_corpus(n: int = 10, size: int = 256, seed: int = 2024, gray: bool = True) -> list[np.ndarray]:
    images = []
    for i in range(n):
        art = drip_painting(size, seed=seed * 1000 + i)
        images.append(to_gray(art) if gray else art)
    return images
