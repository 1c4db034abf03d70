import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tvcavity.signal import (Constant, Envelope, FlatTopSine, Gaussian, RaisedCosine,
                             SampledKnots, Step, eval_mirror, flat_top_shape, make_grid,
                             synthesize_pulse, transmission_of)

from oracles import flat_top_energy

reflect = st.floats(0.0, 1.0)
times = st.floats(-50.0, 50.0, allow_nan=False)


@st.composite
def profiles(draw):
    kind = draw(st.sampled_from(["const", "step", "cos", "knots"]))
    if kind == "const":
        return Constant(draw(st.floats(-2.0, 2.0)))
    if kind == "step":
        return Step(draw(times), draw(reflect), draw(reflect))
    if kind == "cos":
        return RaisedCosine(draw(times), draw(st.floats(0.0, 5.0)), draw(reflect), draw(reflect))
    n = draw(st.integers(3, 12))
    vals = draw(st.lists(st.floats(-0.5, 1.5), min_size=n, max_size=n))
    return SampledKnots(np.arange(n) + 0.5, vals, draw(st.sampled_from(["hold", "cubic-spline"])))


class TestGrid:
    def test_odd_samples_rejected(self):
        with pytest.raises(ValueError, match="even"):
            make_grid(63, 10)

    def test_basic_quantities(self):
        g = make_grid(64, 10)
        assert g.n_samples == 640
        assert g.dt == 1 / 64
        assert g.half_shift == 32
        assert g.times[0] == 0.0 and g.times[-1] == pytest.approx(10 - 1 / 64)

    def test_start_shifts_times(self):
        g = make_grid(4, 3, start=-1.0)
        assert g.times[0] == -1.0 and g.end == 2.0

    @pytest.mark.parametrize("spr,nrt", [(0, 4), (2, 0), (4.5, 2)])
    def test_bad_counts(self, spr, nrt):
        with pytest.raises(ValueError):
            make_grid(spr, nrt)


class TestEnvelope:
    def test_length_checked(self):
        with pytest.raises(ValueError):
            Envelope(np.zeros(5), make_grid(4, 2))

    def test_nonfinite_rejected(self):
        v = np.zeros(8)
        v[3] = np.nan
        with pytest.raises(ValueError):
            Envelope(v, make_grid(4, 2))

    def test_read_only(self):
        e = Envelope(np.ones(8), make_grid(4, 2))
        with pytest.raises(ValueError):
            e.values[0] = 2

    def test_energy_and_scaling(self):
        e = Envelope(np.ones(8), make_grid(4, 2))
        assert e.energy() == pytest.approx(2.0)
        assert (2j * e).energy() == pytest.approx(8.0)


class TestMirrors:
    @given(profiles(), st.lists(times, min_size=1, max_size=20))
    def test_values_in_unit_interval(self, prof, ts):
        r = eval_mirror(prof, np.array(ts))
        assert np.all((r >= 0) & (r <= 1))

    def test_many_random_probes(self):
        rng = np.random.default_rng(1)
        profs = [Constant(1.3), Step(2.0, 0.2, 0.9), RaisedCosine(1.0, 1.0),
                 SampledKnots(np.arange(8) + 0.5, rng.uniform(-0.2, 1.2, 8), "cubic-spline")]
        t = rng.uniform(-20, 20, 25_000)
        for p in profs:
            r = p(t)
            assert r.min() >= 0 and r.max() <= 1

    def test_step_switches_at_threshold(self):
        s = Step(1.0)
        assert s(0.999) == 0.0 and s(1.0) == 1.0

    def test_raised_cosine_midpoint_and_limits(self):
        rc = RaisedCosine(1.0, 1.0)
        assert rc(1.0) == pytest.approx(0.5)
        assert rc(0.5) == 0.0 and rc(1.5) == 1.0

    def test_raised_cosine_zero_rise_is_step(self):
        t = np.linspace(-1, 3, 101)
        np.testing.assert_array_equal(RaisedCosine(1.0, 0.0)(t), Step(1.0)(t))

    def test_hold_interpolation(self):
        k = SampledKnots([0.5, 1.5, 2.5], [0.1, 0.2, 0.3])
        np.testing.assert_allclose(k([0.0, 0.5, 1.49, 1.5, 2.7, 9.0]),
                                   [0.1, 0.1, 0.1, 0.2, 0.3, 0.3])

    def test_spline_through_knots_and_held_outside(self):
        kt, kv = np.arange(6) + 0.5, np.array([0.2, 0.5, 0.4, 0.8, 0.6, 0.7])
        s = SampledKnots(kt, kv, "cubic-spline")
        np.testing.assert_allclose(s(kt), kv, atol=1e-14)
        assert s(-3.0) == pytest.approx(kv[0]) and s(30.0) == pytest.approx(kv[-1])

    def test_knot_validation(self):
        with pytest.raises(ValueError):
            SampledKnots([1.0, 0.5, 2.0], [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            SampledKnots([0.5, 1.5], [0.1, 0.2], "cubic-spline")
        with pytest.raises(ValueError):
            SampledKnots([0.5, 1.5], [0.1, 0.2], "linear")

    @given(st.floats(0.0, 1.0))
    def test_lossless_closure(self, r):
        t = transmission_of(r)
        assert r * r + t * t == pytest.approx(1.0)

    @pytest.mark.parametrize("r", [-0.1, 1.1, float("nan")])
    def test_transmission_domain(self, r):
        with pytest.raises(ValueError):
            transmission_of(r)


class TestPulses:
    @pytest.mark.parametrize("edge,expected", [("raised-cosine", 0.84375),
                                               ("quarter-sine", 0.875)])
    def test_flat_top_energy(self, edge, expected):
        assert flat_top_energy(0.75, edge) == pytest.approx(expected, abs=1e-12)
        g = make_grid(4096, 1)
        e = synthesize_pulse(FlatTopSine(edge=edge), g).energy()
        assert e == pytest.approx(expected, rel=1e-6)

    @given(st.floats(0.0, 1.0), st.sampled_from(["raised-cosine", "quarter-sine"]))
    def test_flat_top_bounded_and_symmetric(self, frac, edge):
        u = np.linspace(0, 1, 201)
        y = flat_top_shape(u, frac, edge)
        assert np.all((y >= 0) & (y <= 1))
        np.testing.assert_allclose(y, y[::-1], atol=1e-12)

    def test_flat_top_zero_outside(self):
        p = FlatTopSine(duration=2.0, arrival=1.0)
        assert p(0.99) == 0 and p(3.01) == 0 and p(2.0) == 1.0

    def test_pulse_must_fit_grid(self):
        with pytest.raises(ValueError, match="does not fit"):
            synthesize_pulse(FlatTopSine(arrival=-0.5), make_grid(8, 4))

    @given(st.floats(0.5, 200.0))
    def test_gaussian_energy(self, sigma):
        assert Gaussian(sigma).energy() == pytest.approx(
            math.sqrt(math.pi / 2) * sigma, rel=1e-12)

    def test_gaussian_grid_energy(self):
        g = make_grid(16, 400, start=-200.0)
        assert synthesize_pulse(Gaussian(30.0), g).energy() == pytest.approx(
            Gaussian(30.0).energy(), rel=1e-9)

    def test_gaussian_peak(self):
        assert Gaussian(5.0, 3.0)(3.0) == 1.0
        assert Gaussian(5.0, 3.0)(8.0) == pytest.approx(math.exp(-1))
