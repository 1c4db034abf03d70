"""Global-best particle swarm minimization over a box, plus a penalty wrapper.

Evaluations inside one iteration are independent and may be farmed out to
an executor; the personal/global best reduction always runs in particle
index order, so a fixed seed gives the same trace however they execute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 40
    max_iterations: int = 600
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    velocity_clamp_fraction: float = 0.2
    seed: int = 0
    # None disables the stall stop
    stall_window: int | None = 50
    stall_tolerance: float = 1e-6

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be at least 2")
        if not 0 <= self.inertia < 1:
            raise ValueError("inertia must lie in [0, 1)")
        if self.cognitive <= 0 or self.social <= 0:
            raise ValueError("cognitive and social coefficients must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not 0 < self.velocity_clamp_fraction:
            raise ValueError("velocity_clamp_fraction must be positive")


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class OptimizationTrace:
    best_costs: list = field(default_factory=list)
    evaluations: int = 0
    best_position: np.ndarray | None = None
    best_cost: float = math.inf
    terminated_by: str = "max_iterations"
    initial_positions: np.ndarray | None = None


def _evaluate(objective, X, vectorized, executor):
    if vectorized:
        y = np.asarray(objective(X), dtype=float)
    elif executor is not None:
        y = np.fromiter(executor.map(objective, list(X)), dtype=float, count=len(X))
    else:
        y = np.fromiter((objective(x) for x in X), dtype=float, count=len(X))
    if y.shape != (len(X),):
        raise ValueError("objective returned the wrong number of costs")
    return np.where(np.isnan(y), np.inf, y)


def pso_minimize(objective, box: Box, cfg: PsoConfig = PsoConfig(), *,
                 vectorized: bool = False, executor=None,
                 initial_positions=None, dim: int | None = None,
                 callback=None) -> OptimizationTrace:
    """Minimize ``objective`` over ``box``.

    Parameters
    ----------
    objective : callable
        ``x -> float``, or ``X (particles, dim) -> costs`` when
        ``vectorized`` is true.  NaN costs count as +inf.
    executor : concurrent.futures.Executor, optional
        Used to map a scalar objective over the swarm.
    initial_positions : array_like, optional
        Rows that replace the first particles of the random initial swarm
        (clipped to the box).
    dim : int, optional
        Expected decision dimension; a mismatch with the box is an error.
    callback : callable, optional
        Called as ``callback(iteration, best_cost)`` after every iteration.
    """
    if dim is not None and dim != box.dim:
        raise ValueError(f"objective expects dimension {dim}, box has {box.dim}")
    rng = np.random.default_rng(cfg.seed)
    P, D = cfg.swarm_size, box.dim
    lo, hi = box.lower, box.upper
    vmax = cfg.velocity_clamp_fraction * box.width

    x = lo + rng.random((P, D)) * box.width
    v = (2 * rng.random((P, D)) - 1) * vmax
    if initial_positions is not None:
        seeds = np.atleast_2d(np.asarray(initial_positions, dtype=float))
        if seeds.shape[1] != D:
            raise ValueError(f"initial positions have dimension {seeds.shape[1]}, box has {D}")
        k = min(len(seeds), P)
        x[:k] = np.clip(seeds[:k], lo, hi)
        v[:k] = 0.0

    trace = OptimizationTrace(initial_positions=x.copy())
    y = _evaluate(objective, x, vectorized, executor)
    trace.evaluations += P
    pbest_x, pbest_y = x.copy(), y.copy()
    g = int(np.argmin(pbest_y))  # first index wins ties
    trace.best_costs.append(float(pbest_y[g]))
    if callback:
        callback(0, float(pbest_y[g]))

    for it in range(1, cfg.max_iterations + 1):
        r1 = rng.random((P, D))
        r2 = rng.random((P, D))
        v = (cfg.inertia * v + cfg.cognitive * r1 * (pbest_x - x)
             + cfg.social * r2 * (pbest_x[g] - x))
        v = np.clip(v, -vmax, vmax)
        x_new = x + v
        clipped = (x_new < lo) | (x_new > hi)
        x = np.clip(x_new, lo, hi)
        v[clipped] = 0.0

        y = _evaluate(objective, x, vectorized, executor)
        trace.evaluations += P
        better = y < pbest_y
        pbest_x[better] = x[better]
        pbest_y[better] = y[better]
        g = int(np.argmin(pbest_y))
        trace.best_costs.append(float(pbest_y[g]))
        if callback:
            callback(it, float(pbest_y[g]))

        w = cfg.stall_window
        if w and len(trace.best_costs) > w:
            old, new = trace.best_costs[-w - 1], trace.best_costs[-1]
            if math.isfinite(old) and old - new <= cfg.stall_tolerance * max(abs(old), 1e-300):
                trace.terminated_by = "stall"
                break

    trace.best_position = pbest_x[g].copy()
    trace.best_cost = float(pbest_y[g])
    return trace


def with_penalty(objective, constraint, weight: float):
    """``x -> objective(x) + weight * constraint(x)`` for a violation >= 0."""
    if not weight > 0:
        raise ValueError("penalty weight must be positive")

    def penalized(x):
        return objective(x) + weight * constraint(x)

    return penalized
