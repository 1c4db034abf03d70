import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tvcavity.metrics import (COST_EPS, FigureOfMerit, bandpass_array, bandpass_filter,
                              cost_capture, cost_emphasis, efficiency, fidelity,
                              fidelity_arrays, passband_mask, psd, spectral_stats)
from tvcavity.signal import Envelope, Gaussian, make_grid, synthesize_pulse

from oracles import gaussian_psd_fwhm

unit = st.floats(0.0, 1.0)


def tone(g, f):
    return Envelope(np.exp(2j * np.pi * f * g.times), g)


def random_env(seed, g):
    rng = np.random.default_rng(seed)
    return Envelope(rng.normal(size=g.n_samples) + 1j * rng.normal(size=g.n_samples), g)


class TestFilter:
    def test_mask_is_half_open_band(self):
        g = make_grid(8, 10)
        k = np.fft.fftfreq(g.n_samples, 1 / g.n_samples)
        m = passband_mask(g)
        assert set(np.abs(k[m]).astype(int)) == {0, 1, 2, 3, 4}

    def test_out_of_band_tone_removed(self):
        g = make_grid(16, 20)
        out = bandpass_filter(tone(g, 1.5))
        assert np.max(np.abs(out.values)) < 1e-12

    def test_in_band_tone_kept(self):
        g = make_grid(16, 20)
        e = tone(g, 0.25)
        np.testing.assert_allclose(bandpass_filter(e).values, e.values, atol=1e-12)

    @given(st.integers(0, 10 ** 6))
    def test_idempotent(self, seed):
        g = make_grid(8, 12)
        once = bandpass_filter(random_env(seed, g))
        np.testing.assert_allclose(bandpass_filter(once).values, once.values, atol=1e-12)

    @given(st.integers(0, 10 ** 6))
    def test_energy_not_increased(self, seed):
        e = random_env(seed, make_grid(8, 12))
        assert bandpass_filter(e).energy() <= e.energy() * (1 + 1e-12)

    def test_batched(self):
        g = make_grid(8, 6)
        X = np.random.default_rng(0).normal(size=(3, g.n_samples))
        Y = bandpass_array(X, g)
        for i in range(3):
            np.testing.assert_allclose(Y[i], bandpass_filter(Envelope(X[i], g)).values)


class TestFidelity:
    @given(st.integers(0, 10 ** 6),
           st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False,
                              allow_infinity=False))
    def test_scale_invariant(self, seed, c):
        g = make_grid(8, 6)
        a, b = random_env(seed, g), random_env(seed + 1, g)
        assert fidelity(c * a, b) == pytest.approx(fidelity(a, b), rel=1e-9)

    @given(st.integers(0, 10 ** 6))
    def test_in_unit_interval(self, seed):
        g = make_grid(8, 6)
        z = fidelity(random_env(seed, g), random_env(seed + 7, g))
        assert 0 <= z <= 1

    def test_identical_is_one(self):
        g = make_grid(8, 6)
        e = random_env(0, g)
        assert fidelity(e, e) == pytest.approx(1.0)

    def test_external_target_energy_lowers_fidelity(self):
        g = make_grid(16, 200)
        gauss = Gaussian(30.0, 30.0)
        tar = synthesize_pulse(gauss, g)
        assert fidelity(tar, tar) == pytest.approx(1.0)
        z = fidelity(tar, tar, target_energy=gauss.energy())
        # the grid holds the part of the target after t = 0
        # (left Riemann sum: the t = 0 sample adds about dt/2 of its power)
        assert z == pytest.approx(0.5 * (1 + math.erf(math.sqrt(2))), abs=2e-4)

    def test_zero_energy_rejected(self):
        g = make_grid(8, 2)
        with pytest.raises(ValueError):
            fidelity(Envelope(np.zeros(16), g), random_env(0, g))
        assert fidelity_arrays(np.zeros(16), np.ones(16)) == 0.0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(random_env(0, make_grid(8, 2)), random_env(0, make_grid(4, 4)))


class TestCosts:
    @given(unit, unit)
    def test_emphasis_non_positive_and_floored(self, z, eta):
        c = cost_emphasis(z, eta)
        assert c <= 0
        assert c >= eta * math.log10(COST_EPS) - 1e-12

    def test_emphasis_reference(self):
        assert cost_emphasis(0.99, 0.5) == pytest.approx(-1.0)
        assert cost_emphasis(1.0, 1.0) == pytest.approx(-12.0)

    @given(unit, unit)
    def test_capture(self, z, eta):
        assert cost_capture(z, eta) == pytest.approx(1 - z * eta)

    def test_batched_costs(self):
        z, e = np.array([0.9, 0.99]), np.array([0.5, 1.0])
        np.testing.assert_allclose(cost_emphasis(z, e), [-0.5, -2.0])

    def test_figure_of_merit(self):
        m = FigureOfMerit.from_pair(0.99, 0.5)
        assert m.loss_db == pytest.approx(3.0103, abs=1e-4)
        assert m.cost("capture") == pytest.approx(0.505)
        with pytest.raises(ValueError):
            m.cost("other")

    def test_efficiency(self):
        g = make_grid(8, 4)
        e = random_env(0, g)
        assert efficiency(0.5 * e, e) == pytest.approx(0.25)
        with pytest.raises(ValueError):
            efficiency(e, Envelope(np.zeros(32), g))


class TestSpectrum:
    @pytest.mark.parametrize("sigma", [2.0, 5.0, 10.0])
    def test_gaussian_fwhm(self, sigma):
        g = make_grid(32, 200, start=-100.0)
        st_ = spectral_stats(synthesize_pulse(Gaussian(sigma), g), pad_factor=4)
        assert st_.fwhm == pytest.approx(gaussian_psd_fwhm(sigma), rel=1e-3)
        assert st_.center == pytest.approx(0.0, abs=st_.resolution)
        assert not st_.edge_flag

    def test_psd_parseval(self):
        e = random_env(2, make_grid(8, 16))
        f, p = psd(e)
        df = f[1] - f[0]
        assert np.sum(p) * df == pytest.approx(e.energy(), rel=1e-12)

    def test_edge_flag_for_white_noise_like(self):
        g = make_grid(4, 2)
        v = np.zeros(8, complex)
        v[0] = 1
        assert spectral_stats(Envelope(v, g)).edge_flag

    def test_peak_ratio(self):
        g = make_grid(16, 20)
        e = synthesize_pulse(Gaussian(2.0, 10.0), g)
        assert spectral_stats(e, reference=0.5 * e).peak_ratio == pytest.approx(4.0)

    def test_zero_envelope(self):
        with pytest.raises(ValueError):
            spectral_stats(Envelope(np.zeros(8), make_grid(4, 2)))
