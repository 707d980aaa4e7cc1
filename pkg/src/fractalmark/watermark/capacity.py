"""Capacity bound, PSNR-constrained strength search and the detection-probability bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage, special

from ..errors import ParamOutOfRange
from ..imaging import psnr
from .chaos import lorenz_bits
from .embed import EmbedConfig, apply_plan, embedding_plan
from .features import build_watermark

NOISE_FLOOR = 1e-12
DEFAULT_TAU = 40.0


def local_variance(gray, window: int = 8) -> np.ndarray:
    """Sliding ``window x window`` variance (reflect borders)."""
    g = np.asarray(gray, dtype=np.float64)
    m = ndimage.uniform_filter(g, window, mode="reflect")
    m2 = ndimage.uniform_filter(g * g, window, mode="reflect")
    return np.maximum(m2 - m * m, 0.0)


def capacity_bound(gray, noise_power, signal_power=None, window: int = 8) -> float:
    """``sum log2(1 + P_signal / P_noise)`` in bits over all pixels.

    ``P_signal`` defaults to the local variance in ``window x window``
    neighbourhoods; ``noise_power`` may be a scalar or a per-pixel grid and
    is floored at ``1e-12``.
    """
    gray = np.asarray(gray, dtype=np.float64)
    ps = local_variance(gray, window) if signal_power is None else np.broadcast_to(
        np.asarray(signal_power, dtype=np.float64), gray.shape)
    pn = np.maximum(np.broadcast_to(np.asarray(noise_power, dtype=np.float64), gray.shape), NOISE_FLOOR)
    return float(np.sum(np.log2(1.0 + ps / pn)))


@dataclass
class StrengthResult:
    alpha: float
    psnr: float
    iterations: int


def optimize_strength(gray, cfg: EmbedConfig = EmbedConfig(), tau_perceptual: float = DEFAULT_TAU,
                      alpha_max: float | None = None, resolution: float = 1e-4,
                      W=None, bits=None) -> StrengthResult:
    """Largest ``alpha_base`` whose embedding keeps PSNR >= ``tau_perceptual``.

    PSNR falls monotonically with alpha, so bisection over ``[0, alpha_max]``
    (default ``2 * cfg.alpha_base``, or 8/255 when that is zero) converges to
    the constraint boundary within ``resolution``. ``tau = inf`` returns 0.
    """
    if not (math.isinf(tau_perceptual) or 0.0 <= tau_perceptual <= 60.0):
        raise ParamOutOfRange("tau_perceptual must lie in [0, 60] dB or be inf")
    if alpha_max is None:
        alpha_max = 2.0 * cfg.alpha_base if cfg.alpha_base > 0 else 8.0 / 255.0
    if math.isinf(tau_perceptual):
        return StrengthResult(0.0, math.inf, 0)
    gray = np.asarray(gray, dtype=np.float64)
    W = build_watermark(gray) if W is None else W
    bits = lorenz_bits(cfg.chaos, cfg.n_bits) if bits is None else bits
    # strength scales linearly with alpha_base, so one plan at unit strength suffices
    plan = embedding_plan(gray, W, bits, replace(cfg, alpha_base=1.0))

    def quality(a: float) -> float:
        return psnr(gray, apply_plan(gray, plan, a))

    top = quality(alpha_max)
    if top >= tau_perceptual:
        return StrengthResult(alpha_max, top, 0)
    lo, hi = 0.0, float(alpha_max)
    it = 0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if quality(mid) >= tau_perceptual:
            lo = mid
        else:
            hi = mid
        it += 1
    return StrengthResult(lo, quality(lo), it)


def gaussian_tail(x) -> np.ndarray:
    """Q(x) = P(Z > x) for standard normal Z."""
    return 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


def detection_bound(n_bits: int, snr: float) -> float:
    """Lower bound ``1 - Q(sqrt(N) * SNR / 2)`` on the detection probability."""
    if n_bits < 1:
        raise ParamOutOfRange("n_bits must be >= 1")
    if snr < 0:
        raise ParamOutOfRange("snr must be >= 0")
    return float(1.0 - gaussian_tail(math.sqrt(n_bits) * snr / 2.0))


def correlation_detector_rate(n_bits: int, snr: float, trials: int = 100_000,
                              seed: int = 0, chunk: int = 10_000) -> float:
    """Monte Carlo detection frequency of a matched-filter correlation detector.

    Each trial draws a random +/-1 sequence ``w`` of length ``n_bits`` and
    observes ``y = a w + n`` with ``n ~ N(0, 1)`` and ``a**2 = snr`` (energy per
    bit over noise energy per bit). The detector declares presence when the
    normalized correlation ``<y, w> / sqrt(N)`` exceeds half its expected
    value ``sqrt(N * snr)``.
    """
    rng = np.random.default_rng(seed)
    a = math.sqrt(snr)
    thresh = math.sqrt(n_bits * snr) / 2.0
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        w = rng.choice(np.array([-1.0, 1.0]), size=(m, n_bits))
        y = a * w + rng.standard_normal((m, n_bits))
        stat = np.einsum("ij,ij->i", y, w) / math.sqrt(n_bits)
        hits += int(np.count_nonzero(stat > thresh))
        done += m
    return hits / trials
