"""Attenuation-limited efficiency for truncated Gaussian output modes.

Output is modelled as per-roundtrip samples ``E(t_n)``, ``t_n = n T_R``,
each having spent ``n + 1/2`` roundtrips in the cavity.  No r2(t) is needed,
and other loss channels (input-side leakage, adjacent resonances) are not
included, so this is a lower bound on the loss of any real shaping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, log_ndtr


@dataclass(frozen=True)
class BoundQuery:
    sigma: float
    roundtrip_loss_db: float
    tau: float | None = None
    target_fidelity: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if (self.tau is None) == (self.target_fidelity is None):
            raise ValueError("give exactly one of tau and target_fidelity")
        if self.target_fidelity is not None and not 0.5 < self.target_fidelity < 1:
            raise ValueError("target_fidelity must lie in (0.5, 1)")

    def resolved_tau(self) -> float:
        if self.tau is not None:
            return self.tau
        return tau_for_fidelity(self.sigma, self.target_fidelity)

    def efficiency(self) -> float:
        return loss_bound(self.sigma, self.resolved_tau(), self.roundtrip_loss_db)


def truncation_fidelity(sigma, tau):
    """Fidelity of exp(-(t-tau)^2/sigma^2) cut to t >= 0 against the full
    Gaussian: the fraction of its power on t >= 0."""
    if np.any(np.asarray(sigma) <= 0):
        raise ValueError("sigma must be positive")
    z = 0.5 * (1.0 + erf(math.sqrt(2.0) * np.asarray(tau, dtype=float) / sigma))
    return float(z) if np.ndim(z) == 0 else z


def tau_for_fidelity(sigma: float, fidelity: float, tol: float = 1e-12) -> float:
    if not 0.5 <= fidelity < 1:
        raise ValueError("fidelity must lie in [0.5, 1)")
    if fidelity == 0.5:
        return 0.0
    lo, hi = 0.0, sigma
    while truncation_fidelity(sigma, hi) < fidelity:
        hi *= 2
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if truncation_fidelity(sigma, mid) < fidelity:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def loss_bound(sigma: float, tau: float, roundtrip_loss_db: float,
               rel_tol: float = 1e-16) -> float:
    """Upper bound on the efficiency (returned as eta, not dB)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if roundtrip_loss_db < 0:
        raise ValueError("roundtrip loss must be non-negative")
    if roundtrip_loss_db == 0:
        return 1.0
    al = roundtrip_loss_db * math.log(10.0) / 20.0
    # work relative to the growth at the Gaussian peak to avoid overflow
    ref = max(tau, 0.0)
    num = den = 0.0
    block = 4096
    start = 0
    while True:
        n = np.arange(start, start + block, dtype=float)
        w = np.exp(-2.0 * ((n - tau) / sigma) ** 2)
        g = w * np.exp(2.0 * al * (n - ref))
        num += w.sum()
        den += g.sum()
        start += block
        if n[-1] > tau and w[-1] < rel_tol * num and g[-1] < rel_tol * den:
            break
    return float(num / (math.exp(al) * den * math.exp(2.0 * al * ref)))


def continuous_efficiency(sigma: float, tau: float, roundtrip_loss_db: float) -> float:
    """Continuous-time counterpart of :func:`loss_bound`.

    The per-roundtrip sums become integrals over t >= 0 of a Gaussian power
    profile with standard deviation sigma/2, giving a ratio of normal CDFs.
    """
    al = roundtrip_loss_db * math.log(10.0) / 20.0
    s = sigma / 2.0
    log_eta = (-al * (1 + 2 * tau) - (al * sigma) ** 2 / 2
               + log_ndtr(tau / s) - log_ndtr((tau + 2 * al * s * s) / s))
    return float(math.exp(log_eta))


def loss_db(eta: float) -> float:
    return 0.0 - 10.0 * math.log10(eta)


def bound_curve_vs_fidelity(sigma: float, roundtrip_loss_db: float, fidelities):
    """Rows of (fidelity, total loss in dB), sorted by fidelity."""
    rows = []
    for z in sorted(fidelities):
        tau = tau_for_fidelity(sigma, z)
        rows.append((float(z), loss_db(loss_bound(sigma, tau, roundtrip_loss_db))))
    return rows


def bound_curve_vs_loss(sigma: float, roundtrip_losses_db, fidelity: float = 0.9999):
    """Rows of (roundtrip loss dB, total loss dB) at fixed fidelity."""
    tau = tau_for_fidelity(sigma, fidelity)
    return [(float(l), loss_db(loss_bound(sigma, tau, l)))
            for l in sorted(roundtrip_losses_db)]
