"""Experiment configuration files (YAML) and their mapping to problems.

Every section is a dataclass; unknown keys and wrongly typed values raise
:class:`ConfigError` naming the field path and, when known, the file line.
"""
from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .optimizer import PsoConfig
from .shaper import ShapingProblem, make_problem
from .signal import EDGE_SHAPES


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path, self.line = path, line
        where = f"{path}" + (f" (line {line})" if line else "")
        super().__init__(f"{where}: {message}")


@dataclass
class CavitySection:
    roundtrip_loss_db: float = 0.025
    roundtrip_phase: float = 0.0


@dataclass
class PulseSection:
    duration: float = 1.0
    arrival: float = 0.0
    flat_fraction: float = 0.75
    edge: str = "raised-cosine"


@dataclass
class SwitchSection:
    """Input mirror: 0 -> 1 switch centered at ``center``, rise time ``beta``.

    ``center: null`` leaves the input mirror open (r1 = 0) throughout.
    """
    center: float | None = 1.0
    beta: float = 0.0


@dataclass
class TargetSection:
    sigma: float = 30.0
    # null: fitted (simulate) or optimized (optimize)
    tau: float | None = None


@dataclass
class R2Section:
    kind: str = "constant"          # constant | knots
    value: float = 0.97
    values: list[float] = field(default_factory=list)
    interpolation: str = "hold"


@dataclass
class CostSection:
    kind: str = "emphasis"
    fidelity_cap: float | None = None
    penalty_weight: float = 1000.0


@dataclass
class GridSection:
    samples_per_roundtrip: int = 64
    window: int | None = None
    margin: int | None = None


@dataclass
class BoundSection:
    sigmas: list[float] = field(default_factory=lambda: [30.0, 50.0])
    roundtrip_loss_db: float = 0.025
    fidelities: list[float] = field(default_factory=lambda: [
        0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999, 0.99999])
    fidelity: float = 0.9999
    roundtrip_losses_db: list[float] = field(default_factory=lambda: [
        0.0, 0.0125, 0.025, 0.0375, 0.05, 0.075, 0.1])
    # physical targets, converted to sigma with the unit mapping
    fwhm_ns: list[float] = field(default_factory=list)


@dataclass
class SweepSection:
    """Optimization grid; an empty list keeps the single-run value."""
    roundtrip_losses_db: list[float] = field(default_factory=list)
    cases: list[int] = field(default_factory=list)
    costs: list[str] = field(default_factory=list)
    sigmas: list[float] = field(default_factory=list)
    # candidates for a best-constant-r2 comparison run next to each optimization
    constant_r2: list[float] = field(default_factory=list)


@dataclass
class UnitsSection:
    roundtrip_time_ps: float | None = None


@dataclass
class ExperimentConfig:
    scenario: str = "custom"
    cavity: CavitySection = field(default_factory=CavitySection)
    pulse: PulseSection = field(default_factory=PulseSection)
    r1: SwitchSection = field(default_factory=SwitchSection)
    target: TargetSection = field(default_factory=TargetSection)
    r2: R2Section = field(default_factory=R2Section)
    cost: CostSection = field(default_factory=CostSection)
    grid: GridSection = field(default_factory=GridSection)
    pso: PsoConfig = field(default_factory=PsoConfig)
    use_initializer: bool = True
    bound: BoundSection = field(default_factory=BoundSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    units: UnitsSection = field(default_factory=UnitsSection)
    output_dir: str = "results"

    def validate(self):
        if self.r2.kind not in ("constant", "knots"):
            raise ConfigError("r2.kind", "must be 'constant' or 'knots'")
        if self.r2.interpolation not in ("hold", "cubic-spline"):
            raise ConfigError("r2.interpolation", "must be 'hold' or 'cubic-spline'")
        if not 0 <= self.r2.value <= 1:
            raise ConfigError("r2.value", "must lie in [0, 1]")
        if any(not 0 <= v <= 1 for v in self.r2.values):
            raise ConfigError("r2.values", "all knots must lie in [0, 1]")
        if self.cost.kind not in ("emphasis", "capture"):
            raise ConfigError("cost.kind", "must be 'emphasis' or 'capture'")
        if self.pulse.edge not in EDGE_SHAPES:
            raise ConfigError("pulse.edge", f"must be one of {EDGE_SHAPES}")
        if self.target.sigma <= 0:
            raise ConfigError("target.sigma", "must be positive")
        if self.grid.samples_per_roundtrip % 2:
            raise ConfigError("grid.samples_per_roundtrip", "must be even")
        for z in self.bound.fidelities + [self.bound.fidelity]:
            if not 0.5 < z < 1:
                raise ConfigError("bound.fidelities", f"fidelity {z} outside (0.5, 1)")
        for c in self.sweep.cases:
            if c not in CASES:
                raise ConfigError("sweep.cases", f"unknown case {c}; known: {sorted(CASES)}")
        if any(not 0 <= v <= 1 for v in self.sweep.constant_r2):
            raise ConfigError("sweep.constant_r2", "candidates must lie in [0, 1]")
        for k in self.sweep.costs:
            if k not in ("emphasis", "capture"):
                raise ConfigError("sweep.costs", f"unknown cost {k!r}")
        if self.bound.fwhm_ns and not self.units.roundtrip_time_ps:
            raise ConfigError("bound.fwhm_ns", "needs units.roundtrip_time_ps")
        return self


# (pulse duration, r1 rise time) in roundtrips
CASES = {1: (1.0, 0.0), 2: (0.9, 1.0)}


# --------------------------------------------------------------------------
# parsing

def _line_map(text: str) -> dict:
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


def _convert(tp, value, path, lines):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path, lines)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path, lines)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list", lines.get(path))
        return [_convert(args[0], v, f"{path}[{i}]", lines) for i, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true/false", lines.get(path))
        return value
    if tp in (int, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}", lines.get(path))
        if tp is int:
            if float(value) != int(value):
                raise ConfigError(path, "expected an integer", lines.get(path))
            return int(value)
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite", lines.get(path))
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string", lines.get(path))
        return value
    return value


def _build(cls, data, path, lines):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected a mapping", lines.get(path))
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in names:
            raise ConfigError(sub, "unknown field", lines.get(sub))
        kwargs[key] = _convert(hints[key], value, sub, lines)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path or "<root>", str(exc), lines.get(path)) from None


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<yaml>", str(exc).splitlines()[0],
                          mark.line + 1 if mark else None) from None
    lines = _line_map(text)
    cfg = _build(ExperimentConfig, data, "", lines)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(exc.path, str(exc).split(": ", 1)[1], lines.get(exc.path)) from None


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# --------------------------------------------------------------------------
# mapping to problems

def problem_from_config(cfg: ExperimentConfig, *, sigma=None, roundtrip_loss_db=None,
                        case=None, cost_kind=None, optimize_tau=None) -> ShapingProblem:
    duration, beta = cfg.pulse.duration, cfg.r1.beta
    if case is not None:
        duration, beta = CASES[case]
    sigma = cfg.target.sigma if sigma is None else sigma
    if optimize_tau is None:
        optimize_tau = cfg.target.tau is None
    return make_problem(
        sigma,
        cfg.cavity.roundtrip_loss_db if roundtrip_loss_db is None else roundtrip_loss_db,
        pulse_duration=duration, beta=beta,
        cost_kind=cfg.cost.kind if cost_kind is None else cost_kind,
        fidelity_cap=cfg.cost.fidelity_cap, penalty_weight=cfg.cost.penalty_weight,
        samples_per_roundtrip=cfg.grid.samples_per_roundtrip, window=cfg.grid.window,
        margin=cfg.grid.margin, arrival=cfg.pulse.arrival, optimize_tau=optimize_tau,
        tau=cfg.target.tau, edge=cfg.pulse.edge, roundtrip_phase=cfg.cavity.roundtrip_phase,
        switch_time=cfg.r1.center, flat_fraction=cfg.pulse.flat_fraction)
