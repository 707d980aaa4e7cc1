"""Haar sub-band power ("turbulence") statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transforms import DwtPyramid, haar_dwt2

# [0, 1] intensities -> 0..255 power units
RESCALE = 255.0 ** 2


@dataclass(frozen=True)
class LevelPower:
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return self.LH + self.HL + self.HH

    @property
    def energy(self) -> float:
        return float(self.LH.sum() + self.HL.sum() + self.HH.sum())


def power_spectrum(pyr: DwtPyramid) -> list[LevelPower]:
    """Elementwise squared detail coefficients for every level, finest first."""
    return [LevelPower(lvl.LH ** 2, lvl.HL ** 2, lvl.HH ** 2) for lvl in pyr.levels]


@dataclass
class TurbulenceFeatures:
    """Mean and population variance of the level-1 combined detail power.

    ``mean_power``, ``var_power`` and ``std_power`` are in [0, 1] intensity
    units. The ``*_255`` properties multiply by ``255**2``, the 8-bit
    convention used in watermark matrices and metadata records; for the
    standard deviation that is the exact change of units.
    """

    mean_power: float
    var_power: float
    level_energy: list[float] = field(default_factory=list)

    @property
    def std_power(self) -> float:
        return float(np.sqrt(self.var_power))

    @property
    def std_power_255(self) -> float:
        return self.std_power * RESCALE

    @property
    def total_energy(self) -> float:
        return float(sum(self.level_energy))

    @property
    def mean_power_255(self) -> float:
        return self.mean_power * RESCALE

    @property
    def var_power_255(self) -> float:
        # variance carries squared power units
        return self.var_power * RESCALE ** 2

    def to_dict(self) -> dict:
        return {
            "mean_power": self.mean_power,
            "var_power": self.var_power,
            "mean_power_255": self.mean_power_255,
            "var_power_255": self.var_power_255,
            "std_power": self.std_power,
            "std_power_255": self.std_power_255,
            "level_energy": list(self.level_energy),
        }


def turbulence_stats(gray, levels: int = 1) -> TurbulenceFeatures:
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ValueError("turbulence_stats expects a grayscale image")
    pyr = haar_dwt2(gray, levels)
    powers = power_spectrum(pyr)
    combined = powers[0].combined
    return TurbulenceFeatures(
        mean_power=float(combined.mean()),
        var_power=float(combined.var()),
        level_energy=[p.energy for p in powers],
    )
