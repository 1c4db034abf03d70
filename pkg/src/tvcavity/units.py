"""Mapping between roundtrip-normalized quantities and physical units."""
from __future__ import annotations

import math
from dataclasses import dataclass

# power FWHM of exp(-t^2/sigma^2) is sqrt(2 ln 2) sigma
FWHM_PER_SIGMA = math.sqrt(2 * math.log(2))


def sigma_from_fwhm(fwhm: float) -> float:
    return fwhm / FWHM_PER_SIGMA


def fwhm_from_sigma(sigma: float) -> float:
    return sigma * FWHM_PER_SIGMA


@dataclass(frozen=True)
class UnitMapping:
    roundtrip_time_ps: float

    def __post_init__(self):
        if not self.roundtrip_time_ps > 0:
            raise ValueError("roundtrip_time_ps must be positive")

    def time_ps(self, t_rt):
        return t_rt * self.roundtrip_time_ps

    def frequency_ghz(self, f_fsr):
        """Frequency in units of 1/T_R (one FSR) to GHz."""
        return f_fsr * 1e3 / self.roundtrip_time_ps

    def sigma_from_fwhm_ns(self, fwhm_ns: float) -> float:
        """Target sigma in roundtrips for a physical power FWHM."""
        return sigma_from_fwhm(fwhm_ns * 1e3 / self.roundtrip_time_ps)
