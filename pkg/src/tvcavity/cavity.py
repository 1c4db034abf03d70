"""Output field of a Fabry-Perot cavity with time-varying mirrors.

Two independent evaluations of the same input/output relation are provided:
the roundtrip recurrence on the auxiliary field A = E_out / t2, and the
explicit sum over roundtrip counts.  They are meant to check each other.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .signal import Envelope, MirrorProfile, TimeGrid, transmission_of


class TruncationWarning(UserWarning):
    """Light was still circulating when the simulation grid ended."""


@dataclass(frozen=True)
class CavityParams:
    roundtrip_time: float = 1.0
    roundtrip_loss_db: float = 0.0
    roundtrip_phase: float = 0.0

    def __post_init__(self):
        if self.roundtrip_loss_db < 0:
            raise ValueError("roundtrip_loss_db must be non-negative")
        if not self.roundtrip_time > 0:
            raise ValueError("roundtrip_time must be positive")

    @property
    def amplitude(self) -> float:
        """Field attenuation over one full roundtrip."""
        return 10.0 ** (-self.roundtrip_loss_db / 20.0)

    @property
    def alpha_l(self) -> float:
        """Half the roundtrip power loss, in nepers."""
        return self.roundtrip_loss_db * math.log(10.0) / 20.0


def _check_grid(grid: TimeGrid, cav: CavityParams):
    if not math.isclose(grid.roundtrip_time, cav.roundtrip_time, rel_tol=1e-12):
        raise ValueError(
            f"grid roundtrip time {grid.roundtrip_time} does not match "
            f"cavity roundtrip time {cav.roundtrip_time}")


def recurrence(inj: np.ndarray, fb: np.ndarray, spr: int) -> np.ndarray:
    """Solve A[i] = inj[i] + fb[i] * A[i - spr] along the last axis.

    Leading axes are batch axes.  The delay is exactly one roundtrip, so each
    roundtrip block depends only on the block before it.
    """
    inj = np.asarray(inj)
    shape = np.broadcast_shapes(inj.shape, np.shape(fb))
    n = shape[-1]
    if n % spr:
        raise ValueError("sample count must be a multiple of samples_per_roundtrip")
    k = n // spr
    inj_b = np.broadcast_to(inj, shape).reshape(shape[:-1] + (k, spr))
    fb_b = np.broadcast_to(fb, shape).reshape(shape[:-1] + (k, spr))
    out = np.empty(shape[:-1] + (k, spr), dtype=complex)
    out[..., 0, :] = inj_b[..., 0, :]
    for j in range(1, k):
        np.multiply(fb_b[..., j, :], out[..., j - 1, :], out=out[..., j, :])
        out[..., j, :] += inj_b[..., j, :]
    return out.reshape(shape)


def _residual_fraction(A, r2_vals, grid, e_in):
    """Energy still circulating after the last sample, relative to the input."""
    tail = slice(-grid.samples_per_roundtrip, None)
    left = np.sum(np.abs(r2_vals[tail] * A[tail]) ** 2) * grid.dt
    return left / e_in if e_in > 0 else 0.0


def propagate_iterative(E_in: Envelope, r1: MirrorProfile, r2: MirrorProfile,
                        cav: CavityParams, residual_tol: float | None = 1e-10
                        ) -> Envelope:
    """Output envelope through mirror 2, from the roundtrip recurrence.

    ``residual_tol`` is the largest tolerated fraction of the input energy
    still inside the cavity at the end of the grid; above it a
    :class:`TruncationWarning` is issued.  ``None`` skips the check.
    """
    grid = E_in.grid
    _check_grid(grid, cav)
    t = grid.times
    half = grid.roundtrip_time / 2
    h = grid.half_shift
    a = cav.amplitude

    # input delayed by half a roundtrip; zero before the grid starts
    e_delayed = np.zeros(grid.n_samples, dtype=complex)
    e_delayed[h:] = E_in.values[:-h]
    inj = math.sqrt(a) * transmission_of(r1(t - half)) * e_delayed
    fb = a * np.exp(1j * cav.roundtrip_phase) * r1(t - half) * r2(t - grid.roundtrip_time)
    A = recurrence(inj, fb, grid.samples_per_roundtrip)

    r2_now = r2(t)
    if residual_tol is not None:
        frac = _residual_fraction(A, r2_now, grid, E_in.energy())
        if frac > residual_tol:
            warnings.warn(
                f"{frac:.3g} of the input energy is still in the cavity at the "
                "end of the grid; extend n_roundtrips", TruncationWarning, stacklevel=2)
    return Envelope(transmission_of(r2_now) * A, grid)


def propagate_sum(E_in: Envelope, r1: MirrorProfile, r2: MirrorProfile,
                  cav: CavityParams, m_max: int | None = None) -> Envelope:
    """Output envelope as an explicit sum over the number of roundtrips.

    Term ``m`` is the part of the input that circulated ``m`` full times
    before leaving.  ``m_max`` defaults to every term that fits on the grid.
    """
    grid = E_in.grid
    _check_grid(grid, cav)
    if m_max is None:
        m_max = grid.n_roundtrips
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    t = grid.times
    T = grid.roundtrip_time
    spr, h, n = grid.samples_per_roundtrip, grid.half_shift, grid.n_samples
    a = cav.amplitude
    phase = np.exp(1j * cav.roundtrip_phase)
    t2 = transmission_of(r2(t))

    out = np.zeros(n, dtype=complex)
    prod = np.ones(n)
    for m in range(m_max + 1):
        if m >= 1:
            prod = prod * r1(t - (m - 0.5) * T) * r2(t - m * T)
        shift = m * spr + h
        if shift >= n:
            break
        delayed = np.zeros(n, dtype=complex)
        delayed[shift:] = E_in.values[:n - shift]
        t1 = transmission_of(r1(t - (m + 0.5) * T))
        out += a ** (0.5 + m) * phase ** m * t1 * t2 * delayed * prod
    return Envelope(out, grid)


def lorentzian_linewidth(r1: float, r2: float, cav: CavityParams) -> float:
    """FWHM (in 1/time units) of a static cavity resonance."""
    if not (0 < r1 <= 1 and 0 < r2 <= 1):
        raise ValueError("reflectivities must lie in (0, 1]")
    rho = r1 * r2 * cav.amplitude
    if rho >= 1:
        raise ValueError("lossless closed cavity has zero linewidth (rho >= 1)")
    return (1 - rho) / (math.pi * math.sqrt(rho)) / cav.roundtrip_time
