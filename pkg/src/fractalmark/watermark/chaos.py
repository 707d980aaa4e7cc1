"""Lorenz-attractor bit generator."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from ..errors import ParamOutOfRange


@dataclass(frozen=True)
class LorenzConfig:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    x0: float = 1.0
    y0: float = 1.0
    z0: float = 1.0
    dt: float = 0.01
    burn_in: int = 1000
    sample_stride: int = 50  # ~0.5 time units: about one lobe-switching time, so samples decorrelate

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.05:
            raise ParamOutOfRange(f"dt must lie in (0, 0.05], got {self.dt}")
        if self.burn_in < 100:
            raise ParamOutOfRange(f"burn_in must be >= 100, got {self.burn_in}")
        if self.sample_stride < 1:
            raise ParamOutOfRange("sample_stride must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ChaoticBits:
    bits: np.ndarray  # uint8 in {0, 1}
    trajectory_length: int

    def __len__(self):
        return int(self.bits.size)

    @property
    def signs(self) -> np.ndarray:
        return 2.0 * self.bits.astype(np.float64) - 1.0


def _rk4_step(x, y, z, dt, s, r, b):
    # plain floats in a fixed order keep the sequence bit-stable
    def f(x, y, z):
        return s * (y - x), x * (r - z) - y, x * y - b * z

    k1 = f(x, y, z)
    k2 = f(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], z + 0.5 * dt * k1[2])
    k3 = f(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], z + 0.5 * dt * k2[2])
    k4 = f(x + dt * k3[0], y + dt * k3[1], z + dt * k3[2])
    h = dt / 6.0
    return (
        x + h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y + h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        z + h * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    )


def lorenz_trajectory(cfg: LorenzConfig, n: int) -> np.ndarray:
    """``n`` samples of x(t) taken every ``sample_stride`` steps after the burn-in."""
    return _trajectory(cfg, int(n)).copy()


@lru_cache(maxsize=32)
def _trajectory(cfg: LorenzConfig, n: int) -> np.ndarray:
    x, y, z = cfg.x0, cfg.y0, cfg.z0
    s, r, b, dt = cfg.sigma, cfg.rho, cfg.beta, cfg.dt
    for _ in range(cfg.burn_in):
        x, y, z = _rk4_step(x, y, z, dt, s, r, b)
    out = np.empty(n)
    for i in range(n):
        for _ in range(cfg.sample_stride):
            x, y, z = _rk4_step(x, y, z, dt, s, r, b)
        out[i] = x
    return out


def lorenz_bits(cfg: LorenzConfig = LorenzConfig(), n: int = 1024) -> ChaoticBits:
    """Median-split bits of the sampled x(t); exactly ``n // 2`` ones.

    Ranking (stable, so ties go to the earlier sample being 0) replaces the
    value comparison, which keeps the ones-count exact even with repeats.
    """
    if n < 8:
        raise ParamOutOfRange(f"n must be >= 8, got {n}")
    xs = _trajectory(cfg, int(n))
    order = np.argsort(xs, kind="stable")
    bits = np.zeros(n, dtype=np.uint8)
    bits[order[n - n // 2:]] = 1
    return ChaoticBits(bits=bits, trajectory_length=n)
