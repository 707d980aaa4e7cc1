"""Box counting, Rényi spectrum, singularity spectrum and WTMM scaling exponents."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft, ndimage, stats

from .errors import DegenerateInput, EmptyMask, GridTooSmall, UnnormalizedMeasure
from .imaging import DEFAULT_EDGE_THRESHOLD, scharr_edges

DEFAULT_NUM_SCALES = 25
DEFAULT_TRIM = 0.1
DEFAULT_Q_GRID = np.linspace(-5.0, 5.0, 21)
DEFAULT_WTMM_SCALES = 2.0 ** np.arange(0.0, 4.01, 0.5)
LOW_CONFIDENCE_SIDE = 64
# grid shifts per axis for the edge-set cover; Scharr turns a 1-px curve into a
# 3-px band that a single fixed grid splits at fine scales
COVER_OFFSETS = 8
_Q1_RADIUS = 1e-6
_MAXIMA_FLOOR = 1e-9


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r2: float
    theil_sen_slope: float = math.nan


def ols_fit(x, y, robust: bool = False) -> LogLogFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two points to fit")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    ts = math.nan
    if robust:
        ts = float(stats.theilslopes(y, x)[0])
    return LogLogFit(slope, intercept, r2, ts)


def default_box_scales(shape, num_scales: int = DEFAULT_NUM_SCALES) -> np.ndarray:
    """``num_scales`` log-spaced box sides from ``min(H, W) / 2`` down to 2 pixels.

    Sides are ``S / n`` for strictly increasing integers ``n``, so each grid
    tiles the square ``S x S`` exactly and no scale ends in a partial box.
    """
    side = min(shape) if min(shape) > 1 else max(shape)
    hi = max(side // 2, 2)
    out: list[int] = []
    for v in np.geomspace(2, hi, num_scales):
        k = int(round(v))
        if out and k <= out[-1]:
            k = out[-1] + 1
        out.append(k)
    return side / np.asarray(out, dtype=np.float64)


def _trim_slice(n: int, trim: float) -> slice:
    k = int(math.floor(trim * n))
    if n - 2 * k < 2:
        k = max(0, (n - 2) // 2)
    return slice(k, n - k)


def box_masses(grid, eps: float) -> np.ndarray:
    """Sum ``grid`` into boxes of side ``eps`` on a grid anchored at the origin.

    Returns the per-box masses for boxes with non-zero mass.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim == 1:
        grid = grid[None, :]
    ys, xs = np.nonzero(grid)
    h, w = grid.shape
    nx = int(math.ceil(w / eps))
    idx = np.floor(ys / eps).astype(np.int64) * nx + np.floor(xs / eps).astype(np.int64)
    sums = np.bincount(idx, weights=grid[ys, xs])
    return sums[sums > 0]


def _axis_cuts(length: int, eps: float, offset: float) -> np.ndarray:
    # pixel i belongs to box floor((i + offset) / eps); return the box boundaries
    idx = np.floor((np.arange(length) + offset) / eps).astype(np.int64)
    return np.concatenate(([0], np.flatnonzero(np.diff(idx)) + 1, [length]))


def _integral(mask: np.ndarray) -> np.ndarray:
    ii = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = mask.astype(np.int64).cumsum(0).cumsum(1)
    return ii


def _count_from_integral(ii: np.ndarray, eps: float, offsets: int) -> int:
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    k = max(1, min(int(offsets), int(math.ceil(eps))))
    shifts = np.arange(k) * (eps / k)
    rows = [_axis_cuts(h, eps, o) for o in shifts]
    cols = [_axis_cuts(w, eps, o) for o in shifts]
    best = None
    for r in rows:
        r0, r1 = r[:-1, None], r[1:, None]
        for c in cols:
            c0, c1 = c[None, :-1], c[None, 1:]
            sums = ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0]
            n = int(np.count_nonzero(sums))
            best = n if best is None else min(best, n)
    return best


def occupied_boxes(mask, eps: float, offsets: int = 1) -> int:
    """Number of side-``eps`` boxes holding at least one set pixel.

    ``offsets=1`` uses the single grid anchored at the origin. Larger values
    shift the grid by ``j * eps / k`` along each axis (``k = min(offsets,
    ceil(eps))``) and return the smallest count, a closer approximation of the
    minimal cover.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 1:
        mask = mask[None, :]
    return _count_from_integral(_integral(mask), eps, offsets)


@dataclass
class BoxCountSeries:
    scales: np.ndarray
    counts: np.ndarray
    fit: LogLogFit
    fit_range: tuple[int, int]

    @property
    def slope(self) -> float:
        return self.fit.slope

    def to_dict(self) -> dict:
        return {
            "scales": [float(s) for s in self.scales],
            "counts": [int(c) for c in self.counts],
            "slope": self.fit.slope,
            "intercept": self.fit.intercept,
            "r2": self.fit.r2,
            "theil_sen_slope": self.fit.theil_sen_slope,
            "fit_range": list(self.fit_range),
        }


def box_count(mask, num_scales: int = DEFAULT_NUM_SCALES, scales=None,
              trim: float = DEFAULT_TRIM, offsets: int = 1) -> BoxCountSeries:
    """Occupied-box counts over log-spaced scales and the log-log slope.

    The slope of ``log N(eps)`` against ``log(1/eps)`` is fitted by OLS over the
    scales left after trimming ``trim`` of the list from each end; the
    Theil-Sen slope over the same points is reported alongside. ``offsets``
    is forwarded to :func:`occupied_boxes`.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 1:
        mask = mask[None, :]
    if not mask.any():
        raise EmptyMask("mask has no set pixels")
    if scales is None:
        if num_scales < 5:
            raise ValueError("num_scales must be >= 5")
        scales = default_box_scales(mask.shape, num_scales)
    scales = np.asarray(scales, dtype=np.float64)
    ii = _integral(mask)
    counts = np.array([_count_from_integral(ii, e, offsets) for e in scales], dtype=np.int64)
    sl = _trim_slice(len(scales), trim)
    fit = ols_fit(np.log(1.0 / scales[sl]), np.log(counts[sl]), robust=True)
    return BoxCountSeries(scales, counts, fit, (sl.start, sl.stop))


@dataclass
class CapacityResult:
    dimension: float
    r2: float
    scale_range: tuple[float, float]
    series: BoxCountSeries
    low_confidence: bool

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "r2": self.r2,
            "scale_range": list(self.scale_range),
            "low_confidence": self.low_confidence,
            "box_count": self.series.to_dict(),
        }


def capacity_dimension(gray, threshold: float = DEFAULT_EDGE_THRESHOLD,
                       num_scales: int = DEFAULT_NUM_SCALES, edges=None,
                       offsets: int = COVER_OFFSETS) -> CapacityResult:
    """Box-counting dimension of the Scharr edge set of a grayscale image."""
    gray = np.asarray(gray, dtype=np.float64)
    if edges is None:
        edges = scharr_edges(gray, threshold)
    try:
        series = box_count(edges.binary, num_scales=num_scales, offsets=offsets)
    except EmptyMask as exc:
        raise DegenerateInput("image has no edges; capacity dimension undefined") from exc
    lo, hi = series.fit_range
    return CapacityResult(
        dimension=series.fit.slope,
        r2=series.fit.r2,
        scale_range=(float(series.scales[hi - 1]), float(series.scales[lo])),
        series=series,
        low_confidence=min(gray.shape) < LOW_CONFIDENCE_SIDE,
    )


# --------------------------------------------------------------------------
# Rényi / singularity spectra


@dataclass
class RenyiSpectrum:
    q: np.ndarray
    D_q: np.ndarray
    tau_q: np.ndarray
    r2: np.ndarray
    scales: np.ndarray

    def to_dict(self) -> dict:
        return {
            "q": self.q.tolist(),
            "D_q": self.D_q.tolist(),
            "tau_q": self.tau_q.tolist(),
            "r2": self.r2.tolist(),
            "scales": self.scales.tolist(),
        }

    def at(self, q: float) -> float:
        i = int(np.argmin(np.abs(self.q - q)))
        if abs(self.q[i] - q) > 1e-9:
            raise KeyError(q)
        return float(self.D_q[i])


def default_measure_scales(shape) -> np.ndarray:
    side = max(shape) if min(shape) == 1 else min(shape)
    top = max(1, side // 4)
    return 2.0 ** np.arange(0, int(math.log2(top)) + 1)


def normalize_measure(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    total = grid.sum()
    if total <= 0:
        raise DegenerateInput("measure has zero total mass")
    return grid / total


def renyi_spectrum(measure, q_grid=DEFAULT_Q_GRID, scales=None) -> RenyiSpectrum:
    """Generalized dimensions from box masses of a normalized measure.

    Entries of ``q_grid`` within 1e-6 of 1 are evaluated with the information
    dimension (``sum p log p`` fit) and get ``tau = 0``.
    """
    measure = np.asarray(measure, dtype=np.float64)
    if measure.ndim == 1:
        measure = measure[None, :]
    if np.any(measure < 0):
        raise UnnormalizedMeasure("measure has negative mass")
    total = measure.sum()
    if abs(total - 1.0) > 1e-6:
        raise UnnormalizedMeasure(f"measure sums to {total}, expected 1")
    if scales is None:
        scales = default_measure_scales(measure.shape)
    scales = np.asarray(scales, dtype=np.float64)
    q = np.asarray(q_grid, dtype=np.float64)
    logeps = np.log(scales)

    masses = [box_masses(measure, e) for e in scales]
    masses = [m / m.sum() for m in masses]
    D = np.empty(q.size)
    tau = np.empty(q.size)
    r2 = np.empty(q.size)
    logs = [np.log(m) for m in masses]
    for i, qi in enumerate(q):
        if abs(qi - 1.0) <= _Q1_RADIUS:
            y = np.array([np.sum(m * lm) for m, lm in zip(masses, logs)])
            fit = ols_fit(logeps, y)
            D[i] = fit.slope
            tau[i] = 0.0
        else:
            # log-sum-exp keeps large |q| finite
            y = np.array([_logsumexp(qi * lm) for lm in logs])
            fit = ols_fit(logeps, y)
            tau[i] = fit.slope
            D[i] = fit.slope / (qi - 1.0)
        r2[i] = fit.r2
    return RenyiSpectrum(q=q, D_q=D, tau_q=tau, r2=r2, scales=scales)


def _logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v))
    return m + math.log(float(np.sum(np.exp(v - m))))


@dataclass
class SingularitySpectrum:
    q: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray

    @property
    def width(self) -> float:
        return float(self.alpha.max() - self.alpha.min())

    def to_dict(self) -> dict:
        return {
            "q": self.q.tolist(),
            "alpha": self.alpha.tolist(),
            "f_alpha": self.f_alpha.tolist(),
            "width": self.width,
        }


def singularity_spectrum(spec: RenyiSpectrum) -> SingularitySpectrum:
    """Legendre pair ``alpha = d tau / d q``, ``f = q alpha - tau`` by finite differences."""
    q = np.asarray(spec.q, dtype=np.float64)
    if q.size < 7:
        raise GridTooSmall(f"need >= 7 q values, got {q.size}")
    steps = np.diff(q)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
        raise GridTooSmall("q grid must be increasing with uniform spacing")
    alpha = np.gradient(spec.tau_q, q, edge_order=1)
    f = q * alpha - spec.tau_q
    return SingularitySpectrum(q=q, alpha=alpha, f_alpha=f)


# --------------------------------------------------------------------------
# WTMM


def mexican_hat(a: float) -> np.ndarray:
    """Isotropic 2D Mexican-hat kernel at scale ``a`` with L1-style 1/a^2 scaling."""
    radius = int(math.ceil(4.0 * a))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    r2 = (ax[:, None] ** 2 + ax[None, :] ** 2) / (a * a)
    k = (2.0 - r2) * np.exp(-r2 / 2.0) / (a * a)
    return k - k.mean()


def cwt_mexican_hat(gray, scales) -> list[np.ndarray]:
    """Wavelet coefficients at each scale via FFT correlation on a replicate-padded image."""
    gray = np.asarray(gray, dtype=np.float64)
    h, w = gray.shape
    kernels = [mexican_hat(a) for a in scales]
    pad = max(k.shape[0] // 2 for k in kernels)
    padded = np.pad(gray, pad, mode="edge")
    ph, pw = padded.shape
    kh = max(k.shape[0] for k in kernels)
    shape = (fft.next_fast_len(ph + kh - 1, real=True), fft.next_fast_len(pw + kh - 1, real=True))
    img_f = fft.rfft2(padded, shape)
    out = []
    for k in kernels:
        r = k.shape[0] // 2
        # kernel is symmetric, so convolution equals correlation
        conv = fft.irfft2(img_f * fft.rfft2(k, shape), shape)
        out.append(conv[pad + r: pad + r + h, pad + r: pad + r + w].copy())
    return out


def modulus_maxima(coeffs, floor: float = _MAXIMA_FLOOR) -> np.ndarray:
    mod = np.abs(coeffs)
    peak = ndimage.maximum_filter(mod, size=3, mode="nearest")
    return (mod >= peak) & (mod > floor)


@dataclass
class WtmmResult:
    scales: np.ndarray
    q: np.ndarray
    Z: np.ndarray  # (len(q), len(scales)); NaN where a scale has no maxima
    n_maxima: np.ndarray
    tau: np.ndarray
    r2: np.ndarray
    no_maxima_scales: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scales": self.scales.tolist(),
            "q": self.q.tolist(),
            "Z": [[None if not np.isfinite(v) else float(v) for v in row] for row in self.Z],
            "n_maxima": self.n_maxima.tolist(),
            "tau": [None if not np.isfinite(v) else float(v) for v in self.tau],
            "r2": [None if not np.isfinite(v) else float(v) for v in self.r2],
            "no_maxima_scales": list(self.no_maxima_scales),
        }


def partition_function(coeffs, maxima, q) -> np.ndarray:
    vals = np.abs(coeffs[maxima])
    if vals.size == 0:
        return np.full(len(q), np.nan)
    logv = np.log(vals)
    return np.array([math.exp(_logsumexp(qi * logv)) if qi != 0 else float(vals.size) for qi in q])


def wtmm(gray, scales=DEFAULT_WTMM_SCALES, q_grid=DEFAULT_Q_GRID) -> WtmmResult:
    """WTMM partition function ``Z(q, a)`` over per-scale 3x3 modulus maxima."""
    scales = np.asarray(scales, dtype=np.float64)
    q = np.asarray(q_grid, dtype=np.float64)
    if scales.size < 4:
        raise ValueError("need at least 4 scales")
    if scales.max() / scales.min() < 10.0 - 1e-9:
        raise ValueError("scales must span at least one decade")
    coeffs = cwt_mexican_hat(gray, scales)
    Z = np.full((q.size, scales.size), np.nan)
    counts = np.zeros(scales.size, dtype=np.int64)
    missing = []
    for j, c in enumerate(coeffs):
        mx = modulus_maxima(c)
        counts[j] = int(mx.sum())
        if counts[j] == 0:
            missing.append(float(scales[j]))
            continue
        Z[:, j] = partition_function(c, mx, q)
    tau = np.full(q.size, np.nan)
    r2 = np.full(q.size, np.nan)
    valid = counts > 0
    if valid.sum() >= 2:
        la = np.log(scales[valid])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            logZ = np.log(Z[:, valid])
        for i in range(q.size):
            if np.all(np.isfinite(logZ[i])):
                fit = ols_fit(la, logZ[i])
                tau[i], r2[i] = fit.slope, fit.r2
    return WtmmResult(scales, q, Z, counts, tau, r2, missing)


# --------------------------------------------------------------------------
# Aggregate report


@dataclass
class FractalReport:
    capacity: CapacityResult
    renyi: RenyiSpectrum
    singularity: SingularitySpectrum
    wtmm: WtmmResult

    @property
    def dimension(self) -> float:
        return self.capacity.dimension

    def to_dict(self) -> dict:
        return {
            "fractal_dimension": self.capacity.dimension,
            "capacity": self.capacity.to_dict(),
            "renyi": self.renyi.to_dict(),
            "singularity": self.singularity.to_dict(),
            "wtmm": self.wtmm.to_dict(),
        }

    def loglog_rows(self):
        """(log(1/eps), log N) scatter rows for plotting."""
        s = self.capacity.series
        lo, hi = s.fit_range
        for i, (e, n) in enumerate(zip(s.scales, s.counts)):
            yield float(np.log(1.0 / e)), float(np.log(n)), lo <= i < hi


def analyze_fractal(gray, threshold: float = DEFAULT_EDGE_THRESHOLD,
                    num_scales: int = DEFAULT_NUM_SCALES, q_grid=DEFAULT_Q_GRID,
                    wtmm_scales=DEFAULT_WTMM_SCALES) -> FractalReport:
    gray = np.asarray(gray, dtype=np.float64)
    edges = scharr_edges(gray, threshold)
    cap = capacity_dimension(gray, threshold, num_scales, edges=edges)
    lo, hi = cap.series.fit_range
    measure = normalize_measure(edges.magnitude)
    ren = renyi_spectrum(measure, q_grid, scales=cap.series.scales[lo:hi])
    sing = singularity_spectrum(ren)
    wt = wtmm(gray, wtmm_scales, q_grid)
    return FractalReport(cap, ren, sing, wt)


__all__ = [
    "BoxCountSeries", "CapacityResult", "FractalReport", "LogLogFit", "RenyiSpectrum",
    "SingularitySpectrum", "WtmmResult", "analyze_fractal", "box_count", "box_masses",
    "capacity_dimension", "cwt_mexican_hat", "mexican_hat", "modulus_maxima", "ols_fit",
    "partition_function", "renyi_spectrum", "singularity_spectrum", "wtmm",
]
