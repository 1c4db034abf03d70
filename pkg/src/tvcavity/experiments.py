"""Experiment runners behind the command line: simulate, optimize, bound and
reproduce.  Each writes CSV tables and one JSON summary into an output
directory; files are replaced atomically.

Column names carry their units: ``_TR`` (roundtrip times), ``_FSR`` (free
spectral ranges), ``_ps``/``_GHz`` (physical, blank without a unit mapping),
``_dB``, ``_rel`` (relative to the input peak power) and ``_norm``
(relative to the input's peak PSD).  ``_field`` marks field reflectivities.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bound import (bound_curve_vs_fidelity, bound_curve_vs_loss, continuous_efficiency,
                    loss_bound, loss_db, tau_for_fidelity)
from .cavity import lorentzian_linewidth
from .config import CASES, ExperimentConfig, config_to_dict, load_config, problem_from_config
from .metrics import FigureOfMerit, psd, spectral_stats
from .shaper import (ShapingProblem, best_constant_r2, check_window, fit_tau, optimize,
                     simulate)
from .signal import Constant, SampledKnots
from .units import UnitMapping

FIGURES = ("fig2", "fig3", "fig4")

# PSD tables are cut to |f| <= this many FSRs
PSD_SPAN_FSR = 4.0
# zero padding used for spectral widths
SPECTRAL_PAD = 8

ENVELOPE_COLUMNS = ("time_TR", "time_ps", "power_in_rel", "power_out_rel",
                    "power_filtered_rel", "power_target_rel")
PSD_COLUMNS = ("frequency_FSR", "frequency_GHz", "psd_in_norm", "psd_out_norm",
               "psd_filtered_norm")
KNOT_COLUMNS = ("knot_index", "time_TR", "r2_hold_field", "r2_spline_field")
PROFILE_COLUMNS = ("time_TR", "time_ps", "r2_hold_field", "r2_spline_field")
TRACE_COLUMNS = ("iteration", "best_cost")
SWEEP_COLUMNS = ("sigma_TR", "roundtrip_loss_dB", "case", "cost", "fidelity", "efficiency",
                 "loss_dB", "bound_loss_dB", "tau_TR", "arrival_TR", "best_cost",
                 "fidelity_smoothed", "efficiency_smoothed")
BOUND_FIDELITY_COLUMNS = ("sigma_TR", "fidelity", "tau_TR", "loss_dB")
BOUND_LOSS_COLUMNS = ("sigma_TR", "roundtrip_loss_dB", "fidelity", "total_loss_dB")


@dataclass
class ResultBundle:
    out_dir: Path
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", True))


# --------------------------------------------------------------------------
# writers

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _atomic_write(Path(path), buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj):
    _atomic_write(Path(path), json.dumps(_jsonable(obj), indent=2) + "\n")


def _stamp(cfg: ExperimentConfig | None, seed) -> dict:
    d = {"version": __version__, "seed": seed,
         "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")}
    if cfg is not None:
        d["config"] = config_to_dict(cfg)
    return d


def _merit_dict(m: FigureOfMerit) -> dict:
    return {"fidelity": m.fidelity, "efficiency": m.efficiency, "loss_dB": m.loss_db,
            "cost_emphasis": m.cost_emphasis, "cost_capture": m.cost_capture}


def _units(cfg: ExperimentConfig):
    t = cfg.units.roundtrip_time_ps
    return UnitMapping(t) if t else None


# --------------------------------------------------------------------------
# shared tables

def bound_loss_at(sigma: float, fidelity: float, roundtrip_loss_db: float) -> float:
    """Attenuation bound (dB) for a target delay giving ``fidelity``."""
    z = min(max(fidelity, 0.5), 1 - 1e-15)
    return loss_db(loss_bound(sigma, tau_for_fidelity(sigma, z), roundtrip_loss_db))


def _write_signals(out: Path, sim, units, files):
    grid = sim.E_in.grid
    t = grid.times
    p_in = sim.E_in.power
    peak = p_in.max()
    # target scaled to the filtered output energy
    e_tar = sim.target.energy()
    scale = sim.E_filtered.energy() / e_tar if e_tar > 0 else 0.0
    rows = zip(t, (units.time_ps(x) if units else None for x in t),
               p_in / peak, sim.E_out.power / peak, sim.E_filtered.power / peak,
               sim.target.power * scale / peak)
    write_csv(out / "envelope.csv", ENVELOPE_COLUMNS, rows)

    f, s_in = psd(sim.E_in)
    _, s_out = psd(sim.E_out)
    _, s_f = psd(sim.E_filtered)
    keep = np.abs(f) <= PSD_SPAN_FSR / grid.roundtrip_time
    ref = s_in.max()
    f_fsr = f[keep] * grid.roundtrip_time
    rows = zip(f_fsr, (units.frequency_ghz(x) if units else None for x in f_fsr),
               s_in[keep] / ref, s_out[keep] / ref, s_f[keep] / ref)
    write_csv(out / "psd.csv", PSD_COLUMNS, rows)
    files += ["envelope.csv", "psd.csv"]

    st_in = spectral_stats(sim.E_in, pad_factor=SPECTRAL_PAD)
    st_out = spectral_stats(sim.E_filtered, reference=sim.E_in, pad_factor=SPECTRAL_PAD)
    T = grid.roundtrip_time
    return {"input_fwhm_FSR": st_in.fwhm * T, "output_fwhm_FSR": st_out.fwhm * T,
            "compression": st_in.fwhm / st_out.fwhm, "peak_psd_ratio": st_out.peak_ratio,
            "fwhm_edge_flag": st_in.edge_flag or st_out.edge_flag}


def _config_r2(cfg: ExperimentConfig, problem: ShapingProblem):
    if cfg.r2.kind == "constant":
        return Constant(cfg.r2.value)
    vals = np.asarray(cfg.r2.values, dtype=float)
    if vals.size == 0:
        raise ValueError("r2.kind 'knots' needs r2.values")
    times = (np.arange(vals.size) + 0.5) * problem.grid.roundtrip_time
    return SampledKnots(times, vals, cfg.r2.interpolation)


# --------------------------------------------------------------------------
# simulate

def cmd_simulate(cfg: ExperimentConfig, out_dir, seed=None) -> ResultBundle:
    """Fixed r2 profile: envelopes, spectra and merits."""
    out = Path(out_dir)
    problem = problem_from_config(cfg)
    r2 = _config_r2(cfg, problem)
    tau = cfg.target.tau
    sim = simulate(problem, r2, 0.0 if tau is None else tau)
    if tau is None:
        eta = sim.merit.efficiency
        tau = fit_tau(problem, sim.E_filtered.values, eta) if eta > 0 else 0.0
        sim = simulate(problem, r2, tau)
    bundle = ResultBundle(out)
    spectrum = _write_signals(out, sim, _units(cfg), bundle.files)
    if isinstance(r2, Constant) and cfg.r1.center is not None and r2.r < 1:
        lw = lorentzian_linewidth(1.0, r2.r, problem.cavity)
        spectrum["lorentzian_FSR"] = lw * problem.grid.roundtrip_time
    bundle.summary = {"scenario": cfg.scenario, "kind": "simulate",
                      "merit": _merit_dict(sim.merit), "tau_TR": tau,
                      "arrival_TR": problem.pulse.arrival, "spectrum": spectrum,
                      **_stamp(cfg, seed)}
    write_json(out / "merit.json", bundle.summary)
    bundle.files.append("merit.json")
    return bundle


# --------------------------------------------------------------------------
# optimize

@dataclass(frozen=True)
class SweepJob:
    sigma: float
    roundtrip_loss_db: float
    case: int | None
    cost: str

    @property
    def name(self) -> str:
        case = "custom" if self.case is None else f"case{self.case}"
        return f"sigma{self.sigma:g}_loss{self.roundtrip_loss_db:g}_{case}_{self.cost}"


def sweep_jobs(cfg: ExperimentConfig) -> list[SweepJob]:
    sw = cfg.sweep
    sigmas = sw.sigmas or [cfg.target.sigma]
    losses = sw.roundtrip_losses_db or [cfg.cavity.roundtrip_loss_db]
    cases = sw.cases or [None]
    costs = sw.costs or [cfg.cost.kind]
    return [SweepJob(s, l, c, k) for s, c, k, l in itertools.product(sigmas, cases, costs, losses)]


def _problem_for(cfg: ExperimentConfig, job: SweepJob) -> ShapingProblem:
    return problem_from_config(cfg, sigma=job.sigma, roundtrip_loss_db=job.roundtrip_loss_db,
                               case=job.case, cost_kind=job.cost)


def _run_job(cfg: ExperimentConfig, job: SweepJob, out: Path, seed, threads: int) -> dict:
    problem = _problem_for(cfg, job)
    t0 = time.perf_counter()
    res = optimize(problem, cfg.pso, use_initializer=cfg.use_initializer, jobs=threads)
    elapsed = time.perf_counter() - t0
    units = _units(cfg)
    files = []

    hold = SampledKnots(res.knot_times, res.knots, "hold")
    spline = res.smoothed_r2
    write_csv(out / "knots.csv", KNOT_COLUMNS,
              ((i, tk, k, float(spline(tk))) for i, (tk, k) in
               enumerate(zip(res.knot_times, res.knots))))
    T = problem.grid.roundtrip_time
    tp = np.arange(0, problem.window * 8 + 1) * (T / 8)
    write_csv(out / "profile.csv", PROFILE_COLUMNS,
              zip(tp, (units.time_ps(x) if units else None for x in tp), hold(tp), spline(tp)))
    tr = res.trace
    write_csv(out / "trace.csv", TRACE_COLUMNS,
              zip(range(len(tr.best_costs)), tr.best_costs))
    files += ["knots.csv", "profile.csv", "trace.csv"]

    sim = simulate(problem, hold, res.tau, res.arrival)
    spectrum = _write_signals(out, sim, units, files)

    m = res.merit
    bound_db = bound_loss_at(job.sigma, m.fidelity, job.roundtrip_loss_db)
    summary = {
        "scenario": cfg.scenario, "kind": "optimize", "job": dataclasses.asdict(job),
        "merit": _merit_dict(m), "merit_smoothed": _merit_dict(res.merit_smoothed),
        "best_cost": tr.best_cost, "tau_TR": res.tau, "arrival_TR": res.arrival,
        "bound_loss_dB": bound_db, "bound_consistent": m.loss_db >= bound_db - 0.1,
        "iterations": len(tr.best_costs) - 1, "evaluations": tr.evaluations,
        "terminated_by": tr.terminated_by,
        "runtime_s": round(elapsed, 1), "spectrum": spectrum,
    }
    if cfg.sweep.constant_r2:
        scan = best_constant_r2(problem, cfg.sweep.constant_r2)
        summary["best_constant"] = {"r2_field": scan.r2, "tau_TR": scan.tau,
                                    **_merit_dict(scan.merit)}
        c_cst = scan.merit.cost(job.cost)
        summary["best_constant"]["cost_ratio"] = (m.cost(job.cost) / c_cst
                                                   if c_cst != 0 else None)
    summary.update(_stamp(cfg, seed))
    write_json(out / "merit.json", summary)
    files.append("merit.json")
    summary["files"] = files
    return summary


def _sweep_row(s: dict):
    j, m, ms = s["job"], s["merit"], s["merit_smoothed"]
    return (j["sigma"], j["roundtrip_loss_db"], "custom" if j["case"] is None else j["case"],
            j["cost"], m["fidelity"], m["efficiency"], m["loss_dB"], s["bound_loss_dB"],
            s["tau_TR"], s["arrival_TR"], s["best_cost"], ms["fidelity"], ms["efficiency"])


def cmd_optimize(cfg: ExperimentConfig, out_dir, seed=None, jobs: int = 1) -> ResultBundle:
    """PSO shaping for one problem, or every entry of the sweep section.

    With several sweep entries and ``jobs > 1`` the entries run in separate
    processes; otherwise ``jobs`` threads share each swarm evaluation.
    """
    out = Path(out_dir)
    if seed is not None:
        cfg = replace(cfg, pso=replace(cfg.pso, seed=int(seed)))
    seed = cfg.pso.seed
    todo = sweep_jobs(cfg)
    for job in todo:
        check_window(_problem_for(cfg, job))
    bundle = ResultBundle(out)
    if len(todo) == 1:
        s = _run_job(cfg, todo[0], out, seed, jobs)
        bundle.files = s.pop("files")
        bundle.summary = s
        return bundle

    dirs = [out / j.name for j in todo]
    if jobs > 1:
        with ProcessPoolExecutor(min(jobs, len(todo))) as pool:
            futs = [pool.submit(_run_job, cfg, j, d, seed, 1) for j, d in zip(todo, dirs)]
            results = [f.result() for f in futs]
    else:
        results = [_run_job(cfg, j, d, seed, 1) for j, d in zip(todo, dirs)]
    for j, s in zip(todo, results):
        bundle.files += [f"{j.name}/{f}" for f in s.pop("files")]
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, (_sweep_row(s) for s in results))
    bundle.summary = {"scenario": cfg.scenario, "kind": "sweep",
                      "runs": [{k: s[k] for k in ("job", "merit", "merit_smoothed",
                                                  "bound_loss_dB", "bound_consistent",
                                                  "tau_TR", "arrival_TR", "best_cost")
                                } | ({"best_constant": s["best_constant"]}
                                     if "best_constant" in s else {})
                               for s in results],
                      **_stamp(cfg, seed)}
    write_json(out / "summary.json", bundle.summary)
    bundle.files += ["sweep.csv", "summary.json"]
    return bundle


# --------------------------------------------------------------------------
# bound

def _bound_sigmas(cfg: ExperimentConfig) -> list[float]:
    sigmas = list(cfg.bound.sigmas)
    units = _units(cfg)
    if cfg.bound.fwhm_ns:
        sigmas += [units.sigma_from_fwhm_ns(f) for f in cfg.bound.fwhm_ns]
    return sigmas


def cmd_bound(cfg: ExperimentConfig, out_dir, seed=None) -> ResultBundle:
    """Attenuation bound tables: loss against fidelity and against roundtrip loss."""
    out = Path(out_dir)
    b = cfg.bound
    sigmas = _bound_sigmas(cfg)
    rows_z, rows_l = [], []
    for s in sigmas:
        for z, db in bound_curve_vs_fidelity(s, b.roundtrip_loss_db, b.fidelities):
            rows_z.append((s, z, tau_for_fidelity(s, z), db))
        for l, db in bound_curve_vs_loss(s, b.roundtrip_losses_db, b.fidelity):
            rows_l.append((s, l, b.fidelity, db))
    write_csv(out / "bound_vs_fidelity.csv", BOUND_FIDELITY_COLUMNS, rows_z)
    write_csv(out / "bound_vs_loss.csv", BOUND_LOSS_COLUMNS, rows_l)
    ref = {}
    for s in sigmas:
        tau = tau_for_fidelity(s, b.fidelity)
        ref[f"{s:g}"] = {"tau_TR": tau,
                         "loss_dB": loss_db(loss_bound(s, tau, b.roundtrip_loss_db)),
                         "continuous_loss_dB": loss_db(
                             continuous_efficiency(s, tau, b.roundtrip_loss_db))}
    summary = {"scenario": cfg.scenario, "kind": "bound", "sigmas_TR": sigmas,
               "at_fidelity": b.fidelity, "roundtrip_loss_dB": b.roundtrip_loss_db,
               "reference": ref}
    units = _units(cfg)
    if units and b.fwhm_ns:
        summary["fwhm_ns_to_sigma_TR"] = {f"{f:g}": units.sigma_from_fwhm_ns(f)
                                          for f in b.fwhm_ns}
    summary.update(_stamp(cfg, seed))
    write_json(out / "bound.json", summary)
    return ResultBundle(out, ["bound_vs_fidelity.csv", "bound_vs_loss.csv", "bound.json"],
                        summary)


# --------------------------------------------------------------------------
# reproduce

def canonical_config(name: str) -> ExperimentConfig:
    """One of the bundled configs (``configs/<name>.yaml``)."""
    ref = resources.files("tvcavity") / "configs" / f"{name}.yaml"
    with resources.as_file(ref) as p:
        return load_config(p)


def _check(checks, name, ok, **detail):
    checks.append({"name": name, "passed": bool(ok), **detail})


def _monotone(values, increasing=True, slack=0.0):
    v = np.asarray(values, dtype=float)
    d = np.diff(v) if increasing else -np.diff(v)
    return bool(np.all(d >= -slack))


def _reproduce_fig2(out: Path, seed, jobs, checks):
    blue = cmd_simulate(canonical_config("fig2_blue"), out / "blue").summary
    m, sp = blue["merit"], blue["spectrum"]
    _check(checks, "blue fidelity 0.77 +- 0.03", abs(m["fidelity"] - 0.77) <= 0.03,
           value=m["fidelity"])
    _check(checks, "blue efficiency 0.82 +- 0.03", abs(m["efficiency"] - 0.82) <= 0.03,
           value=m["efficiency"])
    _check(checks, "blue output FWHM <= input FWHM / 50",
           sp["output_fwhm_FSR"] <= sp["input_fwhm_FSR"] / 50,
           value=sp["output_fwhm_FSR"], limit=sp["input_fwhm_FSR"] / 50)
    rel = abs(sp["output_fwhm_FSR"] / sp["lorentzian_FSR"] - 1)
    _check(checks, "blue output FWHM within 25% of Lorentzian", rel <= 0.25, value=rel)

    red = cmd_optimize(canonical_config("fig2_red"), out / "red", seed, jobs).summary
    m, ms = red["merit"], red["merit_smoothed"]
    _check(checks, "red fidelity >= 0.999", m["fidelity"] >= 0.999, value=m["fidelity"])
    _check(checks, "red efficiency 0.66 +- 0.05", abs(m["efficiency"] - 0.66) <= 0.05,
           value=m["efficiency"])
    _check(checks, "red loss above attenuation bound - 0.1 dB", red["bound_consistent"],
           value=m["loss_dB"], bound=red["bound_loss_dB"])
    _check(checks, "red smoothing changes fidelity < 0.01 and efficiency < 0.02",
           abs(ms["fidelity"] - m["fidelity"]) < 0.01
           and abs(ms["efficiency"] - m["efficiency"]) < 0.02,
           fidelity_change=ms["fidelity"] - m["fidelity"],
           efficiency_change=ms["efficiency"] - m["efficiency"])

    green = cmd_optimize(canonical_config("fig2_green"), out / "green", seed, jobs).summary
    m = green["merit"]
    _check(checks, "green fidelity in [0.93, 0.951]", 0.93 <= m["fidelity"] <= 0.951,
           value=m["fidelity"])
    _check(checks, "green efficiency >= 0.75", m["efficiency"] >= 0.75, value=m["efficiency"])
    _check(checks, "green loss above attenuation bound - 0.1 dB", green["bound_consistent"],
           value=m["loss_dB"], bound=green["bound_loss_dB"])


def _reproduce_fig3(out: Path, checks):
    cfg = canonical_config("fig3")
    s = cmd_bound(cfg, out).summary
    b = cfg.bound
    r = s["reference"]["30"]
    _check(checks, "bound at sigma 30, fidelity 0.9999 matches continuous form (0.05 dB)",
           abs(r["loss_dB"] - r["continuous_loss_dB"]) <= 0.05,
           value=r["loss_dB"], oracle=r["continuous_loss_dB"])
    zs = {sg: bound_curve_vs_fidelity(sg, b.roundtrip_loss_db, b.fidelities)
          for sg in b.sigmas}
    ls = {sg: bound_curve_vs_loss(sg, b.roundtrip_losses_db, b.fidelity) for sg in b.sigmas}
    for sg in b.sigmas:
        _check(checks, f"sigma {sg:g}: loss increases with fidelity",
               all(x < y for (_, x), (_, y) in zip(zs[sg], zs[sg][1:])))
        _check(checks, f"sigma {sg:g}: loss increases with roundtrip loss",
               all(x < y for (_, x), (_, y) in zip(ls[sg], ls[sg][1:])))
    lo, hi = min(b.sigmas), max(b.sigmas)
    _check(checks, f"sigma {hi:g} curve above sigma {lo:g} (fidelity sweep)",
           all(y > x for (_, x), (_, y) in zip(zs[lo], zs[hi])))
    _check(checks, f"sigma {hi:g} curve above sigma {lo:g} (lossy roundtrips)",
           all(y > x for (l, x), (_, y) in zip(ls[lo], ls[hi]) if l > 0))
    if "fwhm_ns_to_sigma_TR" in s:
        sig = s["fwhm_ns_to_sigma_TR"].get("1.8")
        if sig is not None:
            _check(checks, "1.8 ns FWHM at 50 ps maps to sigma 30.6 +- 0.05",
                   abs(sig - 30.57) <= 0.05, value=sig)


def _reproduce_fig4(out: Path, seed, jobs, checks):
    sweep = cmd_optimize(canonical_config("fig4"), out / "sweep", seed, jobs).summary
    runs = sweep["runs"]
    for r in runs:
        j = r["job"]
        _check(checks, f"{SweepJob(**j).name}: loss above attenuation bound - 0.1 dB",
               r["bound_consistent"], value=r["merit"]["loss_dB"], bound=r["bound_loss_dB"])

    def get(sigma, case, cost, loss):
        for r in runs:
            j = r["job"]
            if (j["sigma"], j["case"], j["cost"], j["roundtrip_loss_db"]) == (
                    sigma, case, cost, loss):
                return r["merit"]
        return None

    keys = {(r["job"]["sigma"], r["job"]["case"], r["job"]["cost"]) for r in runs}
    losses = sorted({r["job"]["roundtrip_loss_db"] for r in runs})
    for sigma, case, cost in sorted(keys, key=str):
        ms = [get(sigma, case, cost, l) for l in losses]
        tag = f"sigma {sigma:g} case {case} {cost}"
        _check(checks, f"{tag}: loss non-decreasing in roundtrip loss (0.05 dB slack)",
               _monotone([m["loss_dB"] for m in ms], slack=0.05),
               values=[m["loss_dB"] for m in ms])
        if cost == "emphasis":
            _check(checks, f"{tag}: fidelity non-increasing in roundtrip loss (5e-4 slack)",
                   _monotone([m["fidelity"] for m in ms], increasing=False, slack=5e-4),
                   values=[m["fidelity"] for m in ms])
    for sigma, l in itertools.product(sorted({k[0] for k in keys}), losses):
        for cost in ("emphasis", "capture"):
            m1, m2 = get(sigma, 1, cost, l), get(sigma, 2, cost, l)
            if m1 and m2:
                d = m2["loss_dB"] - m1["loss_dB"]
                _check(checks, f"sigma {sigma:g} loss {l:g} {cost}: case 2 - case 1 loss <= 2 dB",
                       d <= 2.0, value=d)
        for case in (1, 2):
            me, mc = get(sigma, case, "emphasis", l), get(sigma, case, "capture", l)
            if me and mc and l > 0:
                _check(checks, f"sigma {sigma:g} loss {l:g} case {case}: "
                               "capture cost gives lower loss and fidelity",
                       mc["loss_dB"] <= me["loss_dB"] + 0.05
                       and mc["fidelity"] <= me["fidelity"] + 5e-4,
                       capture=mc, emphasis=me)

    contrast = cmd_optimize(canonical_config("fig4_contrast"), out / "contrast",
                            seed, jobs).summary
    ratio = contrast["best_constant"]["cost_ratio"]
    _check(checks, "zero loss: time-varying C' <= 0.5 x best constant C'", ratio <= 0.5,
           value=ratio)


def cmd_reproduce(figure: str, out_dir, seed=None, jobs: int = 1) -> ResultBundle:
    """Run the bundled configs of one figure and check them against the
    acceptance tolerances; ``summary["passed"]`` is the overall verdict."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    out = Path(out_dir) / figure
    checks: list[dict] = []
    t0 = time.perf_counter()
    if figure == "fig2":
        _reproduce_fig2(out, seed, jobs, checks)
    elif figure == "fig3":
        _reproduce_fig3(out, checks)
    else:
        _reproduce_fig4(out, seed, jobs, checks)
    summary = {"figure": figure, "passed": all(c["passed"] for c in checks),
               "n_checks": len(checks), "n_failed": sum(not c["passed"] for c in checks),
               "runtime_s": round(time.perf_counter() - t0, 1), "checks": checks,
               **_stamp(None, seed)}
    write_json(out / "summary.json", summary)
    return ResultBundle(out, ["summary.json"], summary)
