import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tvcavity.bound import tau_for_fidelity
from tvcavity.cavity import CavityParams, propagate_iterative
from tvcavity.optimizer import PsoConfig
from tvcavity.shaper import (BatchEvaluator, InfeasibleTargetError, InfeasibleWindowError,
                             best_constant_r2, check_window, default_window, evaluate,
                             gaussian_weights, knots_for_weights, make_problem, optimize,
                             r2_profile, reverse_engineer_r2, seed_positions, simulate,
                             smooth_r2)
from tvcavity.signal import Constant, SampledKnots, synthesize_pulse


@pytest.fixture(scope="module")
def small():
    return make_problem(5.0, 0.05, samples_per_roundtrip=16)


@pytest.fixture(scope="module")
def small_case2():
    return make_problem(5.0, 0.05, pulse_duration=0.9, beta=1.0, samples_per_roundtrip=16)


@pytest.fixture(scope="module")
def ref_problem():
    return make_problem(30.0, 0.025)


def roundtrip_energies(E, n):
    """Energy in the output windows [k + 1/2, k + 3/2), k < n."""
    g = E.grid
    p = E.power[g.half_shift:g.half_shift + n * g.samples_per_roundtrip]
    return p.reshape(n, -1).sum(axis=1) * g.dt


class TestProblem:
    def test_default_window(self):
        assert default_window(30.0) == math.ceil(tau_for_fidelity(30.0, 0.9999) + 120) == 176

    def test_default_grid(self, ref_problem):
        assert ref_problem.grid.samples_per_roundtrip == 64
        assert ref_problem.grid.n_roundtrips == 176 + 240
        assert ref_problem.dim == 177 and not ref_problem.optimize_arrival

    def test_case2_optimizes_arrival(self, small_case2):
        assert small_case2.optimize_arrival and small_case2.grid.start == -1.0
        b = small_case2.box()
        assert b.lower[-1] == -1.0 and b.upper[-1] == 1.0

    @given(st.lists(st.floats(0, 1), min_size=30, max_size=30), st.floats(0, 30),
           st.floats(-1, 1))
    def test_split_join_roundtrip(self, knots, tau, arrival):
        p = make_problem(5.0, 0.05, pulse_duration=0.9, beta=1.0, samples_per_roundtrip=4)
        x = p.join(knots, tau, arrival)
        k, t, a = p.split(x)
        np.testing.assert_array_equal(k, knots)
        assert (t, a) == (tau, arrival)
        assert p.box().contains(x)

    def test_validation(self, small):
        with pytest.raises(ValueError):
            make_problem(5.0, cost_kind="other", samples_per_roundtrip=4)
        with pytest.raises(ValueError):
            make_problem(5.0, optimize_tau=False, samples_per_roundtrip=4)
        with pytest.raises(ValueError):
            make_problem(5.0, beta=1.0, optimize_arrival=False, samples_per_roundtrip=4)
        with pytest.raises(ValueError):
            small.split(np.zeros(3))

    def test_fidelity_cap_penalty(self):
        p = make_problem(5.0, fidelity_cap=0.95, samples_per_roundtrip=4)
        assert p.cost(0.95, 0.8) == pytest.approx(0.8 * math.log10(0.05))
        assert p.cost(0.96, 0.8) == pytest.approx(0.8 * math.log10(0.04) + 10.0)

    def test_window_check(self):
        check_window(make_problem(5.0, samples_per_roundtrip=4))
        with pytest.raises(InfeasibleWindowError):
            check_window(make_problem(30.0, window=60, samples_per_roundtrip=4))


class TestEvaluation:
    def test_batch_matches_reference_path(self, small):
        rng = np.random.default_rng(0)
        X = np.array([small.join(rng.uniform(0.5, 1, small.window), t) for t in (3.0, 9.0)])
        ev = BatchEvaluator(small)
        for x, (z, eta) in zip(X, zip(*ev.merits(X))):
            knots, tau, _ = small.split(x)
            m = simulate(small, r2_profile(small, knots), float(tau)).merit
            assert z == pytest.approx(m.fidelity, rel=1e-10)
            assert eta == pytest.approx(m.efficiency, rel=1e-10)
            assert evaluate(small, x).fidelity == pytest.approx(m.fidelity, rel=1e-10)

    def test_batch_matches_reference_with_arrival(self, small_case2):
        p = small_case2
        x = p.join(np.full(p.window, 0.8), 6.0, 0.3)
        m = simulate(p, r2_profile(p, p.split(x)[0]), 6.0, 0.3).merit
        assert evaluate(p, x).efficiency == pytest.approx(m.efficiency, rel=1e-10)
        assert evaluate(p, x).fidelity == pytest.approx(m.fidelity, rel=1e-10)

    def test_costs_match_merits(self, small):
        x = small.join(np.full(small.window, 0.9), 5.0)
        m = evaluate(small, x)
        assert BatchEvaluator(small).costs(x[None])[0] == pytest.approx(m.cost_emphasis)


class TestInitializer:
    @given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=25), st.floats(0, 0.5))
    def test_energy_balance(self, w, loss):
        # the knots emit exactly scale * w per roundtrip when the input is captured
        p = make_problem(5.0, loss, window=len(w), margin=5, samples_per_roundtrip=8)
        cav = p.cavity
        E = synthesize_pulse(p.pulse, p.grid)
        stored = cav.amplitude * E.energy()
        knots = knots_for_weights(w, cav, stored)
        out = propagate_iterative(E, p.r1, r2_profile(p, knots), cav, residual_tol=None)
        got = roundtrip_energies(out, len(w))
        scale = stored / np.sum(np.asarray(w) * cav.amplitude ** (-2 * np.arange(len(w))))
        np.testing.assert_allclose(got, scale * np.asarray(w), rtol=1e-9, atol=1e-12)
        assert knots[-1] == pytest.approx(0.0, abs=1e-6)

    def test_infeasible_scale(self):
        with pytest.raises(InfeasibleTargetError) as exc:
            knots_for_weights([0.5, 0.6], CavityParams(), stored=1.0, scale=1.0)
        assert exc.value.roundtrip == 1

    def test_weights_cover_target(self, ref_problem):
        tau = tau_for_fidelity(30.0, 0.9999)
        w = gaussian_weights(ref_problem, tau)
        # window starts half a roundtrip after t = 0
        expected = 30.0 * math.sqrt(math.pi / 2) * 0.5 * (
            math.erfc(math.sqrt(2) * (0.5 - tau) / 30.0)
            - math.erfc(math.sqrt(2) * (176.5 - tau) / 30.0))
        assert w.sum() == pytest.approx(expected, rel=1e-12)

    def test_seed_reaches_published_point(self, ref_problem):
        # energy balance at the zeta = 0.9999 delay
        tau = tau_for_fidelity(30.0, 0.9999)
        m = evaluate(ref_problem, ref_problem.join(reverse_engineer_r2(ref_problem, tau), tau))
        assert m.fidelity == pytest.approx(0.9999, abs=2e-4)
        assert m.efficiency == pytest.approx(0.66, abs=0.01)

    def test_seeds_inside_box(self, ref_problem):
        S = seed_positions(ref_problem)
        assert len(S) == 5
        assert all(ref_problem.box().contains(s) for s in S)

    def test_reverse_needs_full_capture(self, small_case2):
        with pytest.raises(ValueError):
            reverse_engineer_r2(small_case2, 5.0)


class TestSmoothing:
    def test_constant(self):
        s = smooth_r2(np.full(8, 0.6), np.arange(8) + 0.5)
        np.testing.assert_allclose(s(np.linspace(-2, 10, 50)), 0.6)

    @given(st.lists(st.floats(0, 1), min_size=3, max_size=30))
    def test_interpolates_and_stays_in_range(self, k):
        kt = np.arange(len(k)) + 0.5
        s = smooth_r2(k, kt)
        np.testing.assert_allclose(s(kt), k, atol=1e-9)
        v = s(np.linspace(0, len(k), 10 * len(k)))
        assert v.min() >= 0 and v.max() <= 1

    def test_needs_three_knots(self):
        with pytest.raises(ValueError):
            smooth_r2([0.1, 0.2], [0.5, 1.5])


class TestConstantScan:
    def test_blue_reference(self, ref_problem):
        scan = best_constant_r2(ref_problem, [0.97])
        assert scan.merit.fidelity == pytest.approx(0.7764, abs=1e-3)
        assert scan.merit.efficiency == pytest.approx(0.8246, abs=1e-3)
        assert scan.tau == pytest.approx(18.57, abs=0.05)

    def test_argmin(self, small):
        grid = [0.5, 0.7, 0.9, 0.95]
        best = best_constant_r2(small, grid)
        assert best.r2 in grid
        for c in grid:
            other = best_constant_r2(small, [c])
            assert small.cost(best.merit.fidelity, best.merit.efficiency) <= \
                small.cost(other.merit.fidelity, other.merit.efficiency) + 1e-12

    def test_empty(self, small):
        with pytest.raises(ValueError):
            best_constant_r2(small, [])


class TestOptimize:
    cfg = PsoConfig(swarm_size=10, max_iterations=15, seed=4, stall_window=None)

    def test_deterministic_and_no_worse_than_seed(self, small):
        a = optimize(small, self.cfg)
        b = optimize(small, self.cfg)
        np.testing.assert_array_equal(a.knots, b.knots)
        assert a.tau == b.tau
        seed_costs = BatchEvaluator(small).costs(seed_positions(small))
        assert a.trace.best_cost <= seed_costs.min()
        assert a.merit.cost("emphasis") == pytest.approx(a.trace.best_cost)

    def test_threads_do_not_change_result(self, small):
        a = optimize(small, self.cfg)
        b = optimize(small, self.cfg, jobs=3)
        assert a.trace.best_costs == b.trace.best_costs

    def test_smoothed_profile_close(self, small):
        r = optimize(small, self.cfg)
        assert isinstance(r.smoothed_r2, SampledKnots)
        assert abs(r.merit_smoothed.fidelity - r.merit.fidelity) < 0.05

    def test_case2_runs(self, small_case2):
        r = optimize(small_case2, self.cfg)
        assert -1 <= r.arrival <= 1
        assert 0 < r.merit.efficiency < 1
