"""Shaping problems: decision vectors -> r2(t) -> output mode -> merit.

Decision vector layout is ``[r2 knots (W)] + [tau]? + [arrival]?``.  Knot
``n`` sits at ``(n + 1/2) T_R`` and, during optimization, holds its value for
one roundtrip, so it sets exactly the coupling of the n-th output copy.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erf

from .bound import tau_for_fidelity
from .cavity import CavityParams, propagate_iterative, recurrence
from .metrics import (FigureOfMerit, bandpass_filter, cost_capture, cost_emphasis,
                      fidelity_arrays, passband_mask)
from .optimizer import Box, OptimizationTrace, PsoConfig, pso_minimize
from .signal import (Constant, Envelope, FlatTopSine, Gaussian, MirrorProfile, RaisedCosine,
                     SampledKnots, Step, TimeGrid, flat_top_shape, make_grid,
                     synthesize_pulse, transmission_of)

COST_KINDS = ("emphasis", "capture")


class InfeasibleTargetError(ValueError):
    def __init__(self, roundtrip: int, demanded: float, stored: float):
        self.roundtrip = roundtrip
        super().__init__(
            f"target demands {demanded:.4g} of energy in roundtrip {roundtrip} "
            f"but only {stored:.4g} is stored")


@dataclass(frozen=True)
class ShapingProblem:
    cavity: CavityParams
    pulse: FlatTopSine
    r1: MirrorProfile
    target_sigma: float
    grid: TimeGrid
    window: int
    cost_kind: str = "emphasis"
    fidelity_cap: float | None = None
    penalty_weight: float = 1e3
    optimize_tau: bool = True
    optimize_arrival: bool = False
    tau: float | None = None

    def __post_init__(self):
        if self.cost_kind not in COST_KINDS:
            raise ValueError(f"cost_kind must be one of {COST_KINDS}")
        if self.window < 1:
            raise ValueError("window must be at least one roundtrip")
        if not self.optimize_tau and self.tau is None:
            raise ValueError("a fixed tau is required when tau is not optimized")
        if self.rise_time > 0 and not self.optimize_arrival:
            raise ValueError("a finite r1 rise time requires optimize_arrival")
        if self.window * self.grid.roundtrip_time > self.grid.end:
            raise ValueError("knot window extends past the end of the grid")

    @property
    def rise_time(self) -> float:
        return getattr(self.r1, "rise_time", 0.0)

    @property
    def captures_fully(self) -> bool:
        """Ideal switch and a pulse no longer than a roundtrip."""
        return (self.rise_time == 0 and self.pulse.duration <= self.grid.roundtrip_time
                and not self.optimize_arrival)

    @property
    def knot_times(self) -> np.ndarray:
        return (np.arange(self.window) + 0.5) * self.grid.roundtrip_time

    @property
    def dim(self) -> int:
        return self.window + int(self.optimize_tau) + int(self.optimize_arrival)

    def box(self) -> Box:
        T = self.grid.roundtrip_time
        lo, hi = [0.0] * self.window, [1.0] * self.window
        if self.optimize_tau:
            lo.append(0.0)
            hi.append(self.window * T)
        if self.optimize_arrival:
            lo.append(-T)
            hi.append(T)
        return Box(lo, hi)

    def split(self, x):
        """(knots, tau, arrival) from a decision vector or a batch of them."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"decision vector has length {x.shape[-1]}, expected {self.dim}")
        W = self.window
        knots = x[..., :W]
        i = W
        if self.optimize_tau:
            tau = x[..., i]
            i += 1
        else:
            tau = np.full(x.shape[:-1], float(self.tau))
        arrival = x[..., i] if self.optimize_arrival else np.full(x.shape[:-1], self.pulse.arrival)
        return knots, tau, arrival

    def join(self, knots, tau=None, arrival=None) -> np.ndarray:
        parts = [np.asarray(knots, dtype=float)]
        if self.optimize_tau:
            parts.append([self.tau if tau is None else tau])
        if self.optimize_arrival:
            parts.append([self.pulse.arrival if arrival is None else arrival])
        return np.concatenate(parts)

    def cost(self, zeta, eta):
        c = cost_emphasis(zeta, eta) if self.cost_kind == "emphasis" else cost_capture(zeta, eta)
        if self.fidelity_cap is not None:
            c = c + self.penalty_weight * np.maximum(0.0, np.asarray(zeta) - self.fidelity_cap)
        return c


def default_window(sigma: float, roundtrip_time: float = 1.0) -> int:
    tau_max = tau_for_fidelity(sigma, 0.9999)
    return int(math.ceil((tau_max + 4 * sigma) / roundtrip_time))


def make_problem(sigma: float = 30.0, roundtrip_loss_db: float = 0.025, *,
                 pulse_duration: float = 1.0, beta: float = 0.0,
                 cost_kind: str = "emphasis", fidelity_cap: float | None = None,
                 samples_per_roundtrip: int = 64, window: int | None = None,
                 margin: int | None = None, arrival: float = 0.0,
                 optimize_tau: bool = True, optimize_arrival: bool | None = None,
                 tau: float | None = None, edge: str = "raised-cosine",
                 roundtrip_phase: float = 0.0, penalty_weight: float = 1e3,
                 switch_time: float | None = 1.0, flat_fraction: float = 0.75
                 ) -> ShapingProblem:
    """Problem in roundtrip time units, r1 switching 0 -> 1 at ``switch_time``.

    ``beta`` is the r1 rise time in roundtrips (0 is an ideal step);
    ``switch_time=None`` leaves the input mirror open throughout.  The grid
    covers the knot window plus ``margin`` roundtrips (default ``8 sigma``)
    and starts one roundtrip early when the arrival time is optimized.
    """
    if optimize_arrival is None:
        optimize_arrival = beta > 0
    if window is None:
        window = default_window(sigma)
    if margin is None:
        margin = int(math.ceil(8 * sigma))
    start = -1.0 if optimize_arrival else 0.0
    n_rt = window + margin + (1 if optimize_arrival else 0)
    grid = make_grid(samples_per_roundtrip, n_rt, 1.0, start)
    if switch_time is None:
        r1 = Constant(0.0)
    elif beta == 0:
        r1 = Step(switch_time)
    else:
        r1 = RaisedCosine(switch_time, beta)
    return ShapingProblem(
        cavity=CavityParams(1.0, roundtrip_loss_db, roundtrip_phase),
        pulse=FlatTopSine(pulse_duration, arrival, flat_fraction, edge),
        r1=r1, target_sigma=sigma, grid=grid, window=window,
        cost_kind=cost_kind, fidelity_cap=fidelity_cap, penalty_weight=penalty_weight,
        optimize_tau=optimize_tau, optimize_arrival=optimize_arrival, tau=tau)


# --------------------------------------------------------------------------
# evaluation

class BatchEvaluator:
    """Vectorized evaluation of many decision vectors at once.

    Equivalent to :func:`evaluate` (hold-interpolated knots) but shares every
    decision-independent array across the batch.
    """

    def __init__(self, problem: ShapingProblem):
        self.problem = p = problem
        g = p.grid
        self.t = t = g.times
        T = g.roundtrip_time
        kt = p.knot_times
        W = p.window
        self.idx_now = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, W - 1)
        self.idx_prev = np.clip(np.searchsorted(kt, t - T, side="right") - 1, 0, W - 1)
        r1h = p.r1(t - T / 2)
        a = p.cavity.amplitude
        self.fb_base = a * np.exp(1j * p.cavity.roundtrip_phase) * r1h
        self.inj_base = math.sqrt(a) * transmission_of(r1h)
        self.mask = passband_mask(g)
        self.target_norm = Gaussian(p.target_sigma).energy() / g.dt
        self._fixed_input = None
        if not p.optimize_arrival:
            self._fixed_input = self._inputs(np.array([p.pulse.arrival]))

    def _inputs(self, arrival):
        """Delayed injected fields and input energies for each arrival time."""
        p, g = self.problem, self.problem.grid
        T = g.roundtrip_time
        u = (self.t[None, :] - T / 2 - arrival[:, None]) / p.pulse.duration
        delayed = flat_top_shape(u, p.pulse.flat_fraction, p.pulse.edge)
        uin = (self.t[None, :] - arrival[:, None]) / p.pulse.duration
        e_in = np.sum(flat_top_shape(uin, p.pulse.flat_fraction, p.pulse.edge) ** 2, axis=-1)
        return self.inj_base * delayed, e_in

    def outputs(self, X):
        """Filtered outputs, targets and input energies for a batch."""
        p = self.problem
        X = np.atleast_2d(X)
        knots, tau, arrival = p.split(X)
        if np.any(knots < 0) or np.any(knots > 1):
            raise ValueError("r2 knots must lie in [0, 1]")
        if self._fixed_input is not None:
            inj, e_in = self._fixed_input
            e_in = np.broadcast_to(e_in, (len(X),))
        else:
            inj, e_in = self._inputs(arrival)
        fb = self.fb_base * knots[:, self.idx_prev]
        A = recurrence(inj, fb, p.grid.samples_per_roundtrip)
        E = np.sqrt(1.0 - knots[:, self.idx_now] ** 2) * A
        spec = np.fft.fft(E, axis=-1)
        spec *= self.mask
        Ef = np.fft.ifft(spec, axis=-1)
        target = np.exp(-((self.t[None, :] - tau[:, None]) / p.target_sigma) ** 2)
        return Ef, target, e_in

    def merits(self, X):
        Ef, target, e_in = self.outputs(X)
        zeta = fidelity_arrays(Ef, target, self.target_norm)
        eta = np.sum(np.abs(Ef) ** 2, axis=-1) / e_in
        return zeta, eta

    def costs(self, X):
        zeta, eta = self.merits(X)
        return self.problem.cost(zeta, eta)


def r2_profile(problem: ShapingProblem, knots, interpolation="hold") -> SampledKnots:
    return SampledKnots(problem.knot_times, np.asarray(knots, dtype=float), interpolation)


@dataclass(frozen=True, eq=False)
class Simulation:
    E_in: Envelope
    E_out: Envelope
    E_filtered: Envelope
    target: Envelope
    merit: FigureOfMerit
    r2: MirrorProfile


def simulate(problem: ShapingProblem, r2: MirrorProfile, tau: float,
             arrival: float | None = None, residual_tol: float | None = None
             ) -> Simulation:
    """Run one profile through cavity, filter and metrics."""
    if arrival is None:
        arrival = problem.pulse.arrival
    pulse = replace(problem.pulse, arrival=float(arrival))
    E_in = synthesize_pulse(pulse, problem.grid)
    E_out = propagate_iterative(E_in, problem.r1, r2, problem.cavity, residual_tol)
    E_f = bandpass_filter(E_out)
    gauss = Gaussian(problem.target_sigma, float(tau))
    tar = synthesize_pulse(gauss, problem.grid)
    zeta = float(fidelity_arrays(E_f.values, tar.values, gauss.energy() / problem.grid.dt))
    eta = E_f.energy() / E_in.energy()
    return Simulation(E_in, E_out, E_f, tar, FigureOfMerit.from_pair(zeta, eta), r2)


def evaluate(problem: ShapingProblem, x) -> FigureOfMerit:
    """Merit of one decision vector (knots hold-interpolated).

    A zero output has no defined fidelity; it is reported as fidelity 0,
    which also makes both costs their worst values.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"decision vector has shape {x.shape}, expected ({problem.dim},)")
    knots, tau, arrival = problem.split(x)
    return simulate(problem, r2_profile(problem, knots), tau, arrival).merit


# --------------------------------------------------------------------------
# initializer and smoothing

def knots_for_weights(weights, cavity: CavityParams, stored: float = 1.0,
                      scale: float | None = None) -> np.ndarray:
    """Per-roundtrip r2 values emitting energies ``scale * weights``.

    Stored energy starts at ``stored``; each roundtrip emits ``p_n`` and the
    rest is attenuated by one roundtrip.  ``scale=None`` uses the largest
    feasible scale, which empties the cavity by the last roundtrip.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    a2 = cavity.amplitude ** 2
    if scale is None:
        scale = stored / np.sum(w * a2 ** -np.arange(len(w), dtype=float))
    U = stored
    knots = np.empty(len(w))
    for n, wn in enumerate(w):
        p = scale * wn
        if p > U + 1e-9 * stored:
            raise InfeasibleTargetError(n, p, U)
        frac = min(p / U, 1.0) if U > 0 else 1.0
        knots[n] = math.sqrt(1.0 - frac)
        U = max(U - p, 0.0) * a2
    return knots


def gaussian_weights(problem: ShapingProblem, tau: float, arrival: float = 0.0):
    """Target energy falling in each output roundtrip of the knot window."""
    T = problem.grid.roundtrip_time
    s = problem.target_sigma / math.sqrt(2.0)  # power ~ exp(-(t-tau)^2 / s^2)
    edges = arrival + (np.arange(problem.window + 1) + 0.5) * T
    return np.diff(erf((edges - tau) / s)) * s * math.sqrt(math.pi) / 2


def reverse_engineer_r2(problem: ShapingProblem, tau: float,
                        scale: float | None = None) -> np.ndarray:
    """Energy-balance construction of knots emitting a Gaussian(sigma, tau).

    Only valid when the whole input is captured.  ``scale`` multiplies the
    per-roundtrip target energies (default: the largest feasible scale).
    """
    if not problem.captures_fully:
        raise ValueError("reverse engineering needs an ideal r1 switch and T_p <= T_R")
    E_in = synthesize_pulse(problem.pulse, problem.grid)
    stored = problem.cavity.amplitude * E_in.energy()
    return knots_for_weights(gaussian_weights(problem, tau, problem.pulse.arrival),
                             problem.cavity, stored, scale)


def smooth_r2(knots, knot_times) -> SampledKnots:
    """Natural cubic spline through the knots, clamped to [0, 1]."""
    if len(knots) < 3:
        raise ValueError("spline smoothing needs at least 3 knots")
    return SampledKnots(knot_times, knots, "cubic-spline")


# --------------------------------------------------------------------------
# optimization

@dataclass(frozen=True, eq=False)
class ShapingResult:
    knots: np.ndarray
    knot_times: np.ndarray
    smoothed_r2: SampledKnots
    tau: float
    arrival: float
    merit: FigureOfMerit
    merit_smoothed: FigureOfMerit
    trace: OptimizationTrace
    problem: ShapingProblem


class ConstantScan(NamedTuple):
    r2: float
    merit: FigureOfMerit
    tau: float


def _best_arrival(problem: ShapingProblem, n: int = 81) -> float:
    """Arrival time keeping the most input energy in a closed cavity."""
    ev = BatchEvaluator(problem)
    arr = np.linspace(-1.0, 1.0, n)
    inj, e_in = ev._inputs(arr)
    spr = problem.grid.samples_per_roundtrip
    # three roundtrips with r2 = 1 are enough for r1 to finish switching
    k = min(4, problem.grid.n_roundtrips)
    fb = ev.fb_base[: k * spr]
    A = recurrence(inj[:, : k * spr], fb, spr)
    kept = np.sum(np.abs(A[:, (k - 1) * spr:]) ** 2, axis=-1) / e_in
    return float(arr[int(np.argmax(kept))])


def seed_positions(problem: ShapingProblem, fidelities=(0.9, 0.95, 0.99, 0.999, 0.9999)):
    """Energy-balance decision vectors for a spread of target delays."""
    sigma = problem.target_sigma
    zs = set(fidelities)
    if problem.fidelity_cap is not None:
        zs |= {problem.fidelity_cap, problem.fidelity_cap - 0.01}
    arrival = _best_arrival(problem) if problem.optimize_arrival else problem.pulse.arrival
    seeds = []
    for z in sorted(zs):
        if not 0.5 < z < 1:
            continue
        tau = tau_for_fidelity(sigma, z)
        if problem.optimize_tau:
            if tau > problem.window * problem.grid.roundtrip_time:
                continue
        else:
            tau = problem.tau
        w = gaussian_weights(problem, tau, arrival)
        knots = knots_for_weights(w, problem.cavity)
        seeds.append(problem.join(knots, tau, arrival))
        if not problem.optimize_tau:
            break
    return np.array(seeds)


def _objective(problem: ShapingProblem, jobs: int):
    ev = BatchEvaluator(problem)
    if jobs <= 1:
        return ev.costs, None
    pool = ThreadPoolExecutor(jobs)

    def costs(X):
        chunks = np.array_split(X, jobs)
        return np.concatenate(list(pool.map(ev.costs, chunks)))

    return costs, pool


class InfeasibleWindowError(ValueError):
    pass


def check_window(problem: ShapingProblem):
    """The knot window has to hold the bulk of the target (three sigma)."""
    need = int(math.ceil(3 * problem.target_sigma / problem.grid.roundtrip_time))
    if problem.window < need:
        raise InfeasibleWindowError(
            f"knot window of {problem.window} roundtrips is too short for "
            f"sigma = {problem.target_sigma:g}; need at least {need}")


def optimize(problem: ShapingProblem, cfg: PsoConfig = PsoConfig(), *,
             use_initializer: bool = True, jobs: int = 1, callback=None) -> ShapingResult:
    """Particle swarm search for the r2 knots (and tau, arrival) of ``problem``.

    With ``use_initializer`` the first particles start from energy-balance
    profiles for a spread of target delays (see :func:`seed_positions`).
    """
    check_window(problem)
    seeds = seed_positions(problem) if use_initializer else None
    objective, pool = _objective(problem, jobs)
    try:
        trace = pso_minimize(objective, problem.box(), cfg, vectorized=True,
                             initial_positions=seeds, dim=problem.dim, callback=callback)
    finally:
        if pool is not None:
            pool.shutdown()
    knots, tau, arrival = problem.split(trace.best_position)
    tau, arrival = float(tau), float(arrival)
    merit = evaluate(problem, trace.best_position)
    smooth = smooth_r2(knots, problem.knot_times)
    merit_s = simulate(problem, smooth, tau, arrival).merit
    return ShapingResult(knots.copy(), problem.knot_times, smooth, tau, arrival,
                         merit, merit_s, trace, problem)


def fit_tau(problem: ShapingProblem, filtered: np.ndarray, eta: float) -> float:
    """Target delay minimizing the problem cost for a fixed filtered output."""
    t = problem.grid.times
    norm = Gaussian(problem.target_sigma).energy() / problem.grid.dt

    def cost(tau):
        g = np.exp(-((t - tau) / problem.target_sigma) ** 2)
        return float(problem.cost(fidelity_arrays(filtered, g, norm), eta))

    T = problem.grid.roundtrip_time
    hi = problem.window * T
    coarse = np.linspace(0.0, hi, int(round(hi / T)) + 1)
    costs = [cost(tk) for tk in coarse]
    k = int(np.argmin(costs))
    res = minimize_scalar(cost, bounds=(coarse[max(k - 1, 0)], coarse[min(k + 1, len(coarse) - 1)]),
                          method="bounded", options={"xatol": 1e-6})
    return float(res.x) if res.fun <= costs[k] else float(coarse[k])


def best_constant_r2(problem: ShapingProblem, r2_grid) -> ConstantScan:
    """Best constant r2 from ``r2_grid``, with tau fitted for each candidate."""
    r2_grid = list(r2_grid)
    if not r2_grid:
        raise ValueError("empty r2 grid")
    ev = BatchEvaluator(problem)
    arrival = _best_arrival(problem) if problem.optimize_arrival else problem.pulse.arrival
    best = None
    for c in r2_grid:
        x = problem.join(np.full(problem.window, float(c)),
                         0.0 if problem.tau is None else problem.tau, arrival)
        Ef, _, e_in = ev.outputs(x[None, :])
        eta = float(np.sum(np.abs(Ef[0]) ** 2) / e_in[0])
        tau = fit_tau(problem, Ef[0], eta) if problem.optimize_tau else float(problem.tau)
        g = np.exp(-((ev.t - tau) / problem.target_sigma) ** 2)
        merit = FigureOfMerit.from_pair(float(fidelity_arrays(Ef[0], g, ev.target_norm)), eta)
        cost = problem.cost(merit.fidelity, merit.efficiency)
        if best is None or cost < best[0]:
            best = (cost, ConstantScan(float(c), merit, tau))
    return best[1]
