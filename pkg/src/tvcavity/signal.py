"""Time grids, pulse envelopes and mirror reflectivity profiles.

All times are in units of the cavity roundtrip time unless a grid is built
with a different ``roundtrip_time``.  Envelopes are complex baseband fields:
the carrier sits on a cavity resonance and is folded out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class TimeGrid:
    samples_per_roundtrip: int
    n_roundtrips: int
    roundtrip_time: float = 1.0
    # Shifted origin, used when the input is allowed to arrive before t = 0.
    start: float = 0.0

    def __post_init__(self):
        spr, nrt = self.samples_per_roundtrip, self.n_roundtrips
        if int(spr) != spr or int(nrt) != nrt:
            raise ValueError("sample and roundtrip counts must be integers")
        if spr < 2 or nrt < 1:
            raise ValueError("need samples_per_roundtrip >= 2 and n_roundtrips >= 1")
        if spr % 2:
            raise ValueError(
                f"samples_per_roundtrip must be even (got {spr}); "
                "half-roundtrip delays have to be whole samples")
        if not self.roundtrip_time > 0:
            raise ValueError("roundtrip_time must be positive")

    @property
    def dt(self) -> float:
        return self.roundtrip_time / self.samples_per_roundtrip

    @property
    def n_samples(self) -> int:
        return self.samples_per_roundtrip * self.n_roundtrips

    @property
    def half_shift(self) -> int:
        return self.samples_per_roundtrip // 2

    @property
    def duration(self) -> float:
        return self.n_roundtrips * self.roundtrip_time

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def times(self) -> np.ndarray:
        return self.start + np.arange(self.n_samples) * self.dt

    @property
    def frequencies(self) -> np.ndarray:
        """DFT bin frequencies (numpy ordering), in 1/time units."""
        return np.fft.fftfreq(self.n_samples, self.dt)


def make_grid(samples_per_roundtrip: int, n_roundtrips: int,
              roundtrip_time: float = 1.0, start: float = 0.0) -> TimeGrid:
    return TimeGrid(samples_per_roundtrip, n_roundtrips, roundtrip_time, start)


@dataclass(frozen=True, eq=False)
class Envelope:
    values: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n_samples,):
            raise ValueError(
                f"envelope has {v.size} samples, grid has {self.grid.n_samples}")
        if not np.all(np.isfinite(v)):
            raise ValueError("envelope contains non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def energy(self) -> float:
        return float(np.sum(self.power) * self.grid.dt)

    def __mul__(self, c):
        return Envelope(self.values * c, self.grid)

    __rmul__ = __mul__


# --------------------------------------------------------------------------
# mirror profiles

@dataclass(frozen=True)
class Constant:
    r: float

    def __call__(self, t):
        return np.clip(np.full(np.shape(t), float(self.r)), 0.0, 1.0)


@dataclass(frozen=True)
class Step:
    t_switch: float
    r_before: float = 0.0
    r_after: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        r = np.where(t < self.t_switch, self.r_before, self.r_after)
        return np.clip(r, 0.0, 1.0)


@dataclass(frozen=True)
class RaisedCosine:
    """Smooth switch occupying ``[center - rise_time/2, center + rise_time/2]``.

    A zero ``rise_time`` degenerates to a :class:`Step` at ``center``.
    """
    center: float
    rise_time: float
    r_before: float = 0.0
    r_after: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.rise_time <= 0:
            return Step(self.center, self.r_before, self.r_after)(t)
        lo = self.center - self.rise_time / 2
        with np.errstate(over="ignore"):
            u = np.clip((t - lo) / self.rise_time, 0.0, 1.0)
        r = self.r_before + (self.r_after - self.r_before) * (1 - np.cos(np.pi * u)) / 2
        return np.clip(r, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class SampledKnots:
    """Reflectivity defined by values at knot times.

    ``hold`` keeps each knot value until the next knot (and the first value
    before the first knot).  ``cubic-spline`` is a natural cubic spline through
    the knots, held at the end values outside the knot span.
    """
    knot_times: np.ndarray
    knot_values: np.ndarray
    interpolation: str = "hold"
    _spline: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        kt = np.asarray(self.knot_times, dtype=float).copy()
        kv = np.asarray(self.knot_values, dtype=float).copy()
        if kt.ndim != 1 or kt.shape != kv.shape or kt.size == 0:
            raise ValueError("knot_times and knot_values must be equal-length 1-D arrays")
        if np.any(np.diff(kt) <= 0):
            raise ValueError("knot_times must be strictly increasing")
        if self.interpolation not in ("hold", "cubic-spline"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        kt.setflags(write=False)
        kv.setflags(write=False)
        object.__setattr__(self, "knot_times", kt)
        object.__setattr__(self, "knot_values", kv)
        if self.interpolation == "cubic-spline":
            if kt.size < 3:
                raise ValueError("cubic-spline interpolation needs at least 3 knots")
            object.__setattr__(self, "_spline", CubicSpline(kt, kv, bc_type="natural"))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        kt, kv = self.knot_times, self.knot_values
        if self.interpolation == "hold":
            idx = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, kt.size - 1)
            r = kv[idx]
        else:
            r = self._spline(np.clip(t, kt[0], kt[-1]))
        return np.clip(r, 0.0, 1.0)


MirrorProfile = Union[Constant, Step, RaisedCosine, SampledKnots]


def eval_mirror(profile: MirrorProfile, t):
    """Reflectivity of ``profile`` at time(s) ``t``, always inside [0, 1]."""
    r = profile(t)
    return float(r) if np.ndim(r) == 0 else r


def transmission_of(r):
    """Field transmission of a lossless mirror with field reflectivity ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1) or np.any(np.isnan(r)):
        raise ValueError("reflectivity must lie in [0, 1]")
    t = np.sqrt(1.0 - r * r)
    return float(t) if t.ndim == 0 else t


# --------------------------------------------------------------------------
# pulses

EDGE_SHAPES = ("raised-cosine", "quarter-sine")


@dataclass(frozen=True)
class FlatTopSine:
    """Time-limited pulse, flat over the central ``flat_fraction`` of its
    duration, with symmetric sinusoidal field edges.

    ``edge="raised-cosine"`` ramps as (1 - cos)/2 over each edge;
    ``edge="quarter-sine"`` ramps as a quarter period of a sine.
    """
    duration: float = 1.0
    arrival: float = 0.0
    flat_fraction: float = 0.75
    edge: str = "raised-cosine"

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")
        if not 0 <= self.flat_fraction <= 1:
            raise ValueError("flat_fraction must lie in [0, 1]")
        if self.edge not in EDGE_SHAPES:
            raise ValueError(f"edge must be one of {EDGE_SHAPES}")

    @property
    def support(self):
        return self.arrival, self.arrival + self.duration

    def __call__(self, t):
        u = (np.asarray(t, dtype=float) - self.arrival) / self.duration
        return flat_top_shape(u, self.flat_fraction, self.edge)


def flat_top_shape(u, flat_fraction=0.75, edge="raised-cosine"):
    """Unit-duration flat-top profile at normalized times ``u``."""
    u = np.asarray(u, dtype=float)
    e = (1.0 - flat_fraction) / 2
    inside = (u >= 0) & (u <= 1)
    if e > 0:
        ramp = np.clip(np.minimum(u, 1 - u) / e, 0.0, 1.0)
        if edge == "quarter-sine":
            y = np.sin(np.pi / 2 * ramp)
        else:
            y = (1 - np.cos(np.pi * ramp)) / 2
    else:
        y = np.ones_like(u)
    return np.where(inside, y, 0.0)


@dataclass(frozen=True)
class Gaussian:
    sigma: float
    tau: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-((t - self.tau) / self.sigma) ** 2)

    def energy(self) -> float:
        """Integral of the power over the whole time axis."""
        return self.sigma * math.sqrt(math.pi / 2)


PulseSpec = Union[FlatTopSine, Gaussian]


def synthesize_pulse(spec: PulseSpec, grid: TimeGrid) -> Envelope:
    if isinstance(spec, FlatTopSine):
        lo, hi = spec.support
        # one-sample slack for round-off in the grid end
        if lo < grid.start - 1e-12 or hi > grid.end + 1e-12:
            raise ValueError(
                f"pulse support [{lo:g}, {hi:g}] does not fit in the grid "
                f"[{grid.start:g}, {grid.end:g}]")
    return Envelope(spec(grid.times).astype(complex), grid)
