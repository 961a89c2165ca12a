import os
import tempfile

import numpy as np
import pytest

from oqsolve import bath


def thermal():
    return bath.ThermalLorentz(gamma0=0.1, cutoff=5.0, temperature=0.25)


def thermal_t0():
    return bath.ThermalLorentz(gamma0=0.2, cutoff=3.0, temperature=0.0)


class TestThermalLorentz:
    # frozen from an independent route: inverse Fourier transform of the
    # spectrum by oscillatory (QAWF) quadrature
    ALPHA_REF = {
        0.1: 0.26407261595324577 - 0.7581633246452781j,
        0.5: -0.10396987818743003 - 0.10260624826558994j,
        2.0: -0.004331063261002539 - 5.674992225191477e-05j,
    }
    # frozen from the infinite Matsubara sum at 30 digits
    LAPLACE_REF = {
        0.3: 0.03898906378114611 - 0.2358490566037736j,
        1.0 + 2.0j: 0.021031501407010683 - 0.16408500053027722j,
    }

    def test_alpha_time_against_quadrature_oracle(self):
        b = thermal()
        for t, ref in self.ALPHA_REF.items():
            assert abs(b.alpha_time(t)[0, 0] - ref) < 1e-9

    def test_imaginary_part_closed_form(self):
        # Im alpha(t) = -(gamma0 Lambda^2 / 2) e^{-Lambda t}, temperature-free
        for temp in (0.25, 1.0, 7.3):
            b = bath.ThermalLorentz(gamma0=0.1, cutoff=5.0, temperature=temp)
            for t in (0.05, 0.4, 1.3):
                want = -0.5 * 0.1 * 25.0 * np.exp(-5.0 * t)
                assert b.alpha_time(t)[0, 0].imag == pytest.approx(want, rel=1e-12)

    def test_negative_time_hermiticity(self):
        b = thermal()
        assert b.alpha_time(-0.7)[0, 0] == np.conj(b.alpha_time(0.7)[0, 0])

    def test_laplace_against_matsubara_oracle(self):
        b = thermal()
        for s, ref in self.LAPLACE_REF.items():
            assert abs(b.laplace(s)[0, 0] - ref) < 1e-12

    def test_stationary_coefficient_against_oracle(self):
        # frozen: infinite Matsubara sum at s = 1e-12 + i
        b = thermal()
        ref = 0.0017939769580952501 - 0.19869238834799166j
        assert abs(b.coefficient_stationary(1.0)[0, 0] - ref) < 1e-9

    def test_full_coefficient_against_quadrature_oracle(self):
        # frozen: direct quadrature of alpha(tau) e^{-i w tau} over [0, 1.5]
        b = thermal()
        ref = -0.0003734997619451196 - 0.2034521173514798j
        assert abs(b.coefficient_full(1.5, 1.0)[0, 0] - ref) < 1e-8

    def test_full_coefficient_reaches_stationary(self):
        b = thermal()
        late = b.coefficient_full(200.0, 1.3)[0, 0]
        stat = b.coefficient_stationary(1.3)[0, 0]
        assert abs(late - stat) < 1e-10

    def test_full_coefficient_zero_time(self):
        assert thermal().coefficient_full(0.0, 2.0)[0, 0] == 0.0

    def test_zero_frequency_real_part_is_gamma0_times_temperature(self):
        b = thermal()
        a = b.coefficient_stationary(0.0)[0, 0]
        assert a.real == pytest.approx(0.1 * 0.25, rel=1e-10)

    def test_spectrum_thermal_form(self):
        b = thermal()
        for w in (0.5, -1.7, 3.0):
            gt = 0.1 * 25.0 / (25.0 + w * w)
            want = gt * w * (1.0 / np.tanh(w / 0.5) - 1.0)
            assert b.alpha_spectrum(w)[0, 0] == pytest.approx(want, rel=1e-10)

    def test_cutoff_on_matsubara_frequency_is_nudged(self):
        # Lambda = 2 pi T k hits the k-th Matsubara pole; must still evaluate
        b = bath.ThermalLorentz(gamma0=0.1, cutoff=2 * np.pi * 0.25 * 3, temperature=0.25)
        val = b.alpha_time(0.5)[0, 0]
        assert np.isfinite(val)

    def test_alpha_time_zero_is_log_divergent(self):
        with pytest.raises(ValueError, match="divergent"):
            thermal().alpha_time(0.0)

    def test_multichannel_diagonal(self):
        b = bath.ThermalLorentz(
            gamma0=[0.1, 0.3], cutoff=[5.0, 2.0], temperature=[0.25, 0.25],
            n_channels=2,
        )
        a = b.alpha_time(0.4)
        assert a.shape == (2, 2)
        assert a[0, 1] == 0 and a[1, 0] == 0
        single = bath.ThermalLorentz(gamma0=0.3, cutoff=2.0, temperature=0.25)
        assert a[1, 1] == pytest.approx(single.alpha_time(0.4)[0, 0], rel=1e-12)


class TestThermalZeroTemperature:
    # frozen from QAWF quadrature of the one-sided zero-temperature spectrum
    ALPHA_REF = {
        0.2: 0.11614244835478772 - 0.493930472462512j,
        1.0: -0.06660424126009884 - 0.04480836155942009j,
        4.0: -0.0041792722485245685 - 5.529725152732732e-06j,
    }

    def test_alpha_time_against_quadrature_oracle(self):
        b = thermal_t0()
        for t, ref in self.ALPHA_REF.items():
            assert abs(b.alpha_time(t)[0, 0] - ref) < 1e-9

    def test_spectrum_single_sided(self):
        b = thermal_t0()
        assert b.alpha_spectrum(2.0)[0, 0] == 0
        w = -2.0
        want = 2 * abs(w) * 0.2 * 9.0 / (9.0 + w * w)
        assert b.alpha_spectrum(w)[0, 0] == pytest.approx(want, rel=1e-12)

    def test_laplace_consistent_with_time_quadrature(self):
        from scipy import integrate

        b = thermal_t0()
        s = 0.8 + 0.3j
        re, _ = integrate.quad(
            lambda t: (b.alpha_time(t)[0, 0] * np.exp(-s * t)).real, 1e-10, 60.0,
            limit=400,
        )
        im, _ = integrate.quad(
            lambda t: (b.alpha_time(t)[0, 0] * np.exp(-s * t)).imag, 1e-10, 60.0,
            limit=400,
        )
        assert abs(b.laplace(s)[0, 0] - (re + 1j * im)) < 1e-6

    def test_vacuum_coefficient_vanishes_at_huge_cutoff_separation(self):
        # He[A(w)] -> 0 for w > 0 at zero temperature (no absorption from vacuum)
        b = thermal_t0()
        a = b.coefficient_stationary(1.5)[0, 0]
        assert abs(a + np.conj(a)) / 2 < 1e-8


class TestExponentialOU:
    def test_alpha_and_spectrum(self):
        b = bath.ExponentialOU(c=[[0.3]], lam=1.2)
        assert b.alpha_time(0.5)[0, 0] == pytest.approx(0.3 * np.exp(-0.6), rel=1e-14)
        assert b.alpha_spectrum(0.7)[0, 0] == pytest.approx(
            0.3 * 2 * 1.2 / (1.44 + 0.49), rel=1e-14
        )

    def test_laplace_pole_rejected(self):
        b = bath.ExponentialOU(c=[[0.3]], lam=1.2)
        with pytest.raises(ValueError, match="pole"):
            b.laplace(-1.2)

    def test_non_hermitian_c_rejected(self):
        with pytest.raises(ValueError, match="Hermitian"):
            bath.ExponentialOU(c=[[0.0, 1.0], [0.0, 0.0]], lam=1.0)

    def test_coefficient_full_closed_form(self):
        b = bath.ExponentialOU(c=[[0.4]], lam=0.9)
        t, w = 1.3, 0.6
        p = 0.9 + 1j * w
        assert b.coefficient_full(t, w)[0, 0] == pytest.approx(
            0.4 * (1 - np.exp(-p * t)) / p, rel=1e-14
        )


class TestWhiteNoise:
    def test_laplace_flat(self):
        b = bath.WhiteNoise(c=[0.6])
        assert b.laplace(0.1)[0, 0] == 0.3
        assert b.laplace(5.0 + 2.0j)[0, 0] == 0.3

    def test_coefficient_time_independent_after_onset(self):
        b = bath.WhiteNoise(c=[0.6])
        assert b.coefficient_full(2.0, 1.7)[0, 0] == b.coefficient_full(9.0, 0.2)[0, 0]

    def test_alpha_time_rejected_at_zero(self):
        with pytest.raises(ValueError):
            bath.WhiteNoise(c=[0.6]).alpha_time(0.0)


class TestTabulated:
    def _make(self):
        tgrid = np.linspace(0.0, 25.0, 1001)
        ou = bath.ExponentialOU(c=[[0.3]], lam=1.2)
        samples = np.array([ou.alpha_time(t) for t in tgrid])
        return bath.Tabulated(tgrid, samples), ou

    def test_interpolation_and_negative_time(self):
        b, ou = self._make()
        assert abs(b.alpha_time(1.234)[0, 0] - ou.alpha_time(1.234)[0, 0]) < 1e-8
        assert b.alpha_time(-0.5)[0, 0] == np.conj(b.alpha_time(0.5)[0, 0])

    def test_laplace_matches_closed_form(self):
        b, ou = self._make()
        for s in (0.2, 1.0 + 0.5j):
            assert abs(b.laplace(s)[0, 0] - ou.laplace(s)[0, 0]) < 1e-7

    def test_coefficient_full_matches_closed_form(self):
        b, ou = self._make()
        assert abs(
            b.coefficient_full(3.0, 0.8)[0, 0] - ou.coefficient_full(3.0, 0.8)[0, 0]
        ) < 1e-5

    def test_csv_round_trip(self):
        b, _ = self._make()
        path = os.path.join(tempfile.mkdtemp(), "alpha.csv")
        b.to_csv(path)
        b2 = bath.Tabulated.from_csv(path)
        assert np.array_equal(b2.times, b.times)
        assert np.array_equal(b2.samples, b.samples)

    def test_nonuniform_grid_rejected(self):
        with pytest.raises(ValueError, match="uniform"):
            bath.Tabulated(np.array([0.0, 0.1, 0.3, 0.4]), np.zeros((4, 1, 1)))

    def test_out_of_range_query_rejected(self):
        b, _ = self._make()
        with pytest.raises(ValueError, match="outside"):
            b.alpha_time(26.0)


class TestKernels:
    def test_thermal_kernel_relations(self):
        b = thermal()
        wgrid = np.linspace(-4, 4, 41)
        trip = bath.kernels(b, wgrid)
        for w, nu, gam in zip(trip.wgrid, trip.nu, trip.gamma):
            gt = 0.1 * 25.0 / (25.0 + w * w)
            assert gam[0, 0].real == pytest.approx(gt, rel=1e-9)
            if w != 0:
                # nu~ = gamma~ w coth(w / 2T)
                assert nu[0, 0].real == pytest.approx(
                    gt * w / np.tanh(w / 0.5), rel=1e-9
                )

    def test_mu_is_i_omega_gamma(self):
        b = thermal()
        trip = bath.kernels(b, [0.7, -1.3])
        for w, mu, gam in zip(trip.wgrid, trip.mu, trip.gamma):
            assert abs(mu[0, 0] - 1j * w * gam[0, 0]) < 1e-10

    def test_kms_residual_thermal(self):
        assert bath.kms_residual(thermal(), np.linspace(-10, 10, 41)) < 1e-12

    def test_kms_residual_detects_violation(self):
        b = bath.ExponentialOU(c=[[0.3]], lam=1.2)  # classical: symmetric spectrum
        assert bath.kms_residual(b, np.linspace(-3, 3, 13)) > 1e-3

    def test_fdi_nonnegative(self):
        for b in (thermal(), thermal_t0(), bath.ExponentialOU(c=[[0.3]], lam=1.2)):
            assert bath.fdi_check(b, np.linspace(-6, 6, 25)) > -1e-12

    def test_fdr_kernel_univariate(self):
        b = thermal()
        w = 0.9
        kappa = bath.fdr_kernel(b, w)[0, 0]
        assert kappa.real == pytest.approx(w / np.tanh(w / 0.5), rel=1e-9)

    def test_fdr_kernel_multivariate_lyapunov(self):
        b = bath.ThermalLorentz(
            gamma0=[0.1, 0.2], cutoff=[5.0, 3.0], temperature=[0.5, 0.5],
            n_channels=2,
        )
        w = 1.1
        kappa = bath.fdr_kernel(b, w)
        trip = bath.kernels(b, [w])
        nu, gam = trip.nu[0], (trip.gamma[0] + np.conj(trip.gamma[0]).T) / 2
        assert np.allclose(gam @ kappa + kappa @ gam, 2 * nu, atol=1e-10)

    def test_sampled_positivity(self):
        b = bath.ExponentialOU(c=[[0.3]], lam=1.2)
        tgrid = np.linspace(0.0, 6.0, 25)
        assert bath.sampled_positivity(b, tgrid) > -1e-10


class TestTanhSeries:
    @pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 5.0, -2.2])
    def test_matches_tanh(self, x):
        assert bath.tanh_series(x) == pytest.approx(np.tanh(x), abs=1e-9)

    def test_gamma_reconstruction(self):
        b = thermal()
        for w in (0.0, 0.8, -1.6):
            got = bath.gamma_from_nu_tanh(b, w)[0, 0]
            want = 0.1 * 25.0 / (25.0 + w * w)
            assert got.real == pytest.approx(want, rel=1e-8)


class TestModuleOps:
    def test_laplace_domain_guard(self):
        with pytest.raises(ValueError, match="Re s"):
            bath.laplace_alpha(thermal(), -0.5)

    def test_negative_time_coefficient_rejected(self):
        with pytest.raises(ValueError):
            bath.coefficient_full(thermal(), -1.0, 0.0)
