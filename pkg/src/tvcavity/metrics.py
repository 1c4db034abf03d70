"""Central-resonance filtering, fidelity, efficiency, cost functions and
spectral width measurements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import Envelope, TimeGrid

# floor on 1 - fidelity inside the log cost
COST_EPS = 1e-12


@dataclass(frozen=True)
class FigureOfMerit:
    fidelity: float
    efficiency: float
    cost_emphasis: float
    cost_capture: float

    @classmethod
    def from_pair(cls, fidelity, efficiency):
        return cls(float(fidelity), float(efficiency),
                   float(cost_emphasis(fidelity, efficiency)),
                   float(cost_capture(fidelity, efficiency)))

    @property
    def loss_db(self) -> float:
        return float(0.0 - 10 * np.log10(self.efficiency)) if self.efficiency > 0 else float("inf")

    def cost(self, kind: str) -> float:
        if kind == "emphasis":
            return self.cost_emphasis
        if kind == "capture":
            return self.cost_capture
        raise ValueError(f"unknown cost kind {kind!r}")


@dataclass(frozen=True)
class SpectralStats:
    fwhm: float
    peak_psd: float
    center: float
    resolution: float
    edge_flag: bool = False
    peak_ratio: float | None = None


def passband_mask(grid: TimeGrid) -> np.ndarray:
    """Bins strictly inside +-FSR/2 around the carrier resonance."""
    n = grid.n_samples
    k = np.fft.fftfreq(n, 1.0 / n).round().astype(np.int64)
    # |f| < 1/(2 T_R)  <=>  2 |k| < n_roundtrips, exact in integers
    return 2 * np.abs(k) < grid.n_roundtrips


def bandpass_array(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    spec = np.fft.fft(values, axis=-1)
    spec *= passband_mask(grid)
    return np.fft.ifft(spec, axis=-1)


def bandpass_filter(E: Envelope) -> Envelope:
    """Keep only the spectral content within half an FSR of the carrier."""
    return Envelope(bandpass_array(E.values, E.grid), E.grid)


def fidelity_arrays(out: np.ndarray, target: np.ndarray, target_norm=None) -> np.ndarray:
    """Normalized squared overlap along the last axis (dt cancels).

    ``target_norm`` replaces the sample sum of ``|target|^2`` (e.g. the
    target's energy over the whole time axis divided by dt).  Returns 0 where
    either argument carries no energy.
    """
    overlap = np.abs(np.sum(out * np.conj(target), axis=-1)) ** 2
    if target_norm is None:
        target_norm = np.sum(np.abs(target) ** 2, axis=-1)
    norm = np.sum(np.abs(out) ** 2, axis=-1) * target_norm
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(norm > 0, overlap / np.where(norm > 0, norm, 1.0), 0.0)
    return np.minimum(z, 1.0)


def fidelity(E_out_filtered: Envelope, E_tar: Envelope,
             target_energy: float | None = None) -> float:
    """Normalized squared overlap of output and target.

    By default the target energy is its Riemann sum on the grid.  Pass
    ``target_energy`` when the target extends beyond the grid (a Gaussian
    whose leading tail lies before t = 0): the part of the target the output
    cannot reach then counts against the fidelity.
    """
    if E_out_filtered.grid != E_tar.grid:
        raise ValueError("fidelity needs both envelopes on the same grid")
    dt = E_tar.grid.dt
    a, b = E_out_filtered.values, E_tar.values
    ea = np.sum(np.abs(a) ** 2) * dt
    eb = np.sum(np.abs(b) ** 2) * dt if target_energy is None else target_energy
    if ea == 0 or eb == 0:
        raise ValueError("fidelity is undefined for a zero-energy envelope")
    return float(min(abs(np.sum(a * np.conj(b)) * dt) ** 2 / (ea * eb), 1.0))


def efficiency(E_out_filtered: Envelope, E_in: Envelope) -> float:
    e_in = E_in.energy()
    if e_in == 0:
        raise ValueError("efficiency is undefined for a zero-energy input")
    return E_out_filtered.energy() / e_in


def cost_emphasis(fidelity, efficiency):
    """eta * log10(1 - zeta), with 1 - zeta floored at COST_EPS. Lower is better."""
    gap = np.maximum(1.0 - np.asarray(fidelity, dtype=float), COST_EPS)
    c = np.asarray(efficiency, dtype=float) * np.log10(gap)
    return float(c) if c.ndim == 0 else c


def cost_capture(fidelity, efficiency):
    c = 1.0 - np.asarray(fidelity, dtype=float) * np.asarray(efficiency, dtype=float)
    return float(c) if c.ndim == 0 else c


def psd(E: Envelope, pad_factor: int = 1):
    """Centered frequencies and |DFT * dt|^2 of ``E``, optionally zero-padded."""
    n = E.grid.n_samples * int(pad_factor)
    spec = np.fft.fftshift(np.fft.fft(E.values, n=n)) * E.grid.dt
    f = np.fft.fftshift(np.fft.fftfreq(n, E.grid.dt))
    return f, np.abs(spec) ** 2


def _half_max_crossing(f, p, i_peak, half, step):
    i = i_peak
    while 0 <= i + step < len(p):
        j = i + step
        if p[j] < half:
            # linear interpolation between bins i and j
            return f[i] + (half - p[i]) * (f[j] - f[i]) / (p[j] - p[i]), False
        i = j
    return f[i], True


def spectral_stats(E: Envelope, reference: Envelope | None = None,
                   pad_factor: int = 1) -> SpectralStats:
    """FWHM, peak and peak position of the power spectral density of ``E``.

    ``edge_flag`` is set when a half-maximum crossing runs into the edge of
    the frequency axis.  With ``reference``, ``peak_ratio`` is the peak PSD
    relative to the reference's peak PSD on the same grid.
    """
    f, p = psd(E, pad_factor)
    if not np.any(p > 0):
        raise ValueError("spectrum of a zero envelope")
    i = int(np.argmax(p))
    half = p[i] / 2
    f_lo, edge_lo = _half_max_crossing(f, p, i, half, -1)
    f_hi, edge_hi = _half_max_crossing(f, p, i, half, +1)
    ratio = None
    if reference is not None:
        ratio = float(p[i] / np.max(psd(reference, pad_factor)[1]))
    return SpectralStats(fwhm=float(f_hi - f_lo), peak_psd=float(p[i]),
                         center=float(f[i]), resolution=float(f[1] - f[0]),
                         edge_flag=edge_lo or edge_hi or i in (0, len(p) - 1),
                         peak_ratio=ratio)
