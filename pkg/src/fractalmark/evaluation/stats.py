"""Interval estimates and two-sample statistics for detection-rate tables."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InsufficientSamples

Z95 = 1.959963984540054
STD_FLOOR = 1e-9
D_CAP = 100.0


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return (0.0, 1.0)
    p = successes / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard rounding at the extremes so the interval always contains p
    return (min(lo, p), max(hi, p))


def coefficient_of_variation(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    m = x.mean() if x.size else 0.0
    if x.size == 0 or m == 0.0:
        return 0.0
    return float(x.std() / m)


@dataclass(frozen=True)
class TwoSample:
    t: float
    df: float
    p: float
    d: float
    n1: int
    n2: int
    mean1: float
    mean2: float

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


def welch_t(x, y) -> tuple[float, float]:
    """Welch's t statistic and Welch-Satterthwaite degrees of freedom."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise InsufficientSamples("need >= 2 samples on each side")
    vx, vy = x.var(ddof=1) / x.size, y.var(ddof=1) / y.size
    diff = x.mean() - y.mean()
    se2 = vx + vy
    if se2 == 0.0:
        return (0.0 if diff == 0.0 else math.copysign(math.inf, diff)), math.inf
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / (vx ** 2 / (x.size - 1) + vy ** 2 / (y.size - 1))
    return float(t), float(df)


def normal_p(t: float) -> float:
    """Two-sided p-value under the normal approximation to the t distribution."""
    if math.isinf(t):
        return 0.0
    return float(math.erfc(abs(t) / math.sqrt(2.0)))


def cohens_d(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise InsufficientSamples("need >= 2 samples on each side")
    n1, n2 = x.size, y.size
    pooled = math.sqrt(((n1 - 1) * x.var(ddof=1) + (n2 - 1) * y.var(ddof=1)) / (n1 + n2 - 2))
    diff = x.mean() - y.mean()
    if diff == 0.0:
        return 0.0
    d = diff / max(pooled, STD_FLOOR)
    return float(max(-D_CAP, min(D_CAP, d)))


def compare(x, y) -> TwoSample:
    t, df = welch_t(x, y)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return TwoSample(t=t, df=df, p=normal_p(t), d=cohens_d(x, y), n1=int(x.size), n2=int(y.size),
                     mean1=float(x.mean()), mean2=float(y.mean()))
