import math

import numpy as np
import pytest

from conftest import make_params
from qrsim import analytic, errors, oracle
from qrsim.model import SystemParams, TimeGrid


def simple(**kw):
    base = dict(omega_q=1100.0, omega_r=1000.0, omega_d=1000.0, g=10.0,
                kappa=1.0, epsilon=0.0, n_th=0.0)
    base.update(kw)
    return SystemParams(**base)


class TestDispersive:
    def test_chi_value_and_sign(self):
        assert analytic.dispersive(simple()).chi == 1.0
        flipped = simple(omega_q=900.0)
        assert analytic.dispersive(flipped).chi == -1.0
        assert math.copysign(1, flipped.chi) == math.copysign(1, flipped.omega_qr)

    def test_excited_resonance_condition(self):
        p = simple(omega_d=1001.0)  # omega_d = omega_r + chi
        disp = analytic.dispersive(p)
        assert disp.omega_tilde_dr(-1) == 0.0

    def test_detuning_split_is_twice_chi(self):
        disp = analytic.dispersive(simple(omega_d=997.3))
        assert disp.omega_tilde_dr(+1) - disp.omega_tilde_dr(-1) == 2.0 * disp.chi

    def test_omega_tilde_qr(self):
        disp = analytic.dispersive(simple())
        assert disp.omega_tilde_qr(+1) == 101.0
        assert disp.omega_tilde_qr(-1) == 99.0


class TestSteadyField:
    def test_zero_drive(self):
        assert analytic.steady_field_amplitude(simple(), -1) == 0.0

    def test_on_resonance_real_unit_amplitude(self):
        p = simple(omega_d=1001.0, epsilon=1.0, kappa=2.0)
        amp = analytic.steady_field_amplitude(p, -1)
        assert amp == pytest.approx(1.0 + 0.0j, abs=1e-15)

    def test_half_power_at_half_linewidth(self):
        kappa = 2.0
        on_res = simple(omega_d=1001.0, epsilon=1.0, kappa=kappa)
        detuned = simple(omega_d=1001.0 + kappa / 2.0, epsilon=1.0, kappa=kappa)
        n_on = abs(analytic.steady_field_amplitude(on_res, -1)) ** 2
        n_off = abs(analytic.steady_field_amplitude(detuned, -1)) ** 2
        assert n_off == pytest.approx(n_on / 2.0, rel=1e-12)


class TestPhotonNumber:
    def test_dark_and_cold_is_empty(self):
        assert analytic.photon_number(simple(), +1) == 0.0

    def test_resonant_drive_plus_thermal(self):
        p = simple(omega_d=1001.0, epsilon=1.0, kappa=2.0, n_th=0.3)
        assert analytic.photon_number(p, -1) == pytest.approx(1.3, rel=1e-14)

    def test_qubit_term(self):
        # omega_qr - chi = 10 exactly when omega_qr solves x - 1/x = 10
        omega_qr = 5.0 + math.sqrt(26.0)
        p = simple(omega_q=1000.0 + omega_qr, g=1.0)
        assert analytic.photon_number(p, -1, include_qubit_term=True) == pytest.approx(
            0.01, rel=1e-12
        )
        assert analytic.photon_number(p, -1) == 0.0
        # ground sector never receives the qubit term
        assert analytic.photon_number(p, +1, include_qubit_term=True) == analytic.photon_number(
            p, +1
        )


class TestRates:
    def test_zero_at_t0_at_bath_fixed_point(self, suite_params):
        p = make_params(epsilon=0.0)
        s = 1.0 / (1.0 + 2.0 * p.n_th)
        assert analytic.sigma_z_rate_full(s, 0.0, p) == 0.0
        # with the interpolation rule the bracket vanishes at every t
        assert analytic.sigma_z_rate_reduced(s, 2.37, p) == pytest.approx(0.0, abs=1e-15)

    def test_reduced_rate_direct_substitution(self):
        p = simple(g=10.0, n_th=0.0, kappa=1.0)
        # sigma_z = -1, eps = 0, t = 0: bracket = 1, rate = 2 g^2 kappa/omega_qr^2
        expected = 2.0 * p.g**2 * p.kappa / p.omega_qr**2
        assert analytic.sigma_z_rate_reduced(-1.0, 0.0, p) == pytest.approx(expected, rel=1e-14)

    def test_resonant_drive_term_vanishes_for_excited(self, suite_params):
        # omega_tilde_dr(-1) = 0: the drive contributes nothing at sigma_z = -1,
        # but the drive photons still enter through n_r^b
        p = suite_params
        t = 0.37
        n_m = analytic.photon_number(p, -1)
        env = math.exp(-0.5 * p.kappa * t)
        b1 = 2.0 * p.omega_qr * math.sin(p.omega_qr * t) * env + p.kappa
        expected = (2.0 * p.g**2 / p.omega_qr**2) * b1 * (n_m + 1.0)
        assert analytic.sigma_z_rate_reduced(-1.0, t, p) == pytest.approx(expected, rel=1e-13)

    def test_full_rate_frozen_value(self, suite_params):
        # independently evaluated (30-digit arithmetic) at sigma_z=-1, t=0.1
        assert analytic.sigma_z_rate_full(-1.0, 0.1, suite_params) == pytest.approx(
            9.105539917598009, rel=1e-12
        )
        assert analytic.sigma_z_rate_reduced(-1.0, 0.1, suite_params) == pytest.approx(
            9.0883016042326926, rel=1e-12
        )


class TestIntegrate:
    def test_no_coupling_is_constant(self):
        p = simple(g=0.0)
        traj = analytic.integrate_sigma_z(-1.0, TimeGrid(0.0, 1.0, 1000), p)
        assert np.all(traj["sigma_z"] == -1.0)

    def test_step_guard(self):
        with pytest.raises(errors.StepTooLarge):
            analytic.integrate_sigma_z(-1.0, TimeGrid(0.0, 1.0, 10), simple())

    def test_small_kappa_matches_closed_form(self):
        # kappa -> 0, short times: sigma_z = -1 + 8 g^2 (n_th+1)/omega_qr^2 sin^2(omega_qr t/2)
        p = SystemParams(omega_q=5400.0, omega_r=5000.0, omega_d=5001.0, g=1.0,
                         kappa=1e-4, epsilon=0.0, n_th=0.3)
        grid = TimeGrid(0.0, 0.05, 250)
        traj = analytic.integrate_sigma_z(-1.0, grid, p, variant="reduced")
        amp = 8.0 * p.g**2 * (p.n_th + 1.0) / p.omega_qr**2
        closed = -1.0 + amp * np.sin(0.5 * p.omega_qr * traj.times) ** 2
        assert np.max(np.abs(traj["sigma_z"] - closed)) < 1e-6

    def test_long_time_limit_and_rate(self):
        p = SystemParams(omega_q=1050.0, omega_r=1000.0, omega_d=1000.0, g=5.0,
                         kappa=1.0, epsilon=0.0, n_th=0.25)
        gamma = p.kappa * (p.g / p.omega_qr) ** 2 * (1.0 + 2.0 * p.n_th)
        grid = TimeGrid(0.0, 600.0, 300000)
        traj = analytic.integrate_sigma_z(-1.0, grid, p, variant="reduced")
        target = analytic.sigma_stationary_bath(p.n_th)
        assert abs(traj["sigma_z"][-1] - target) < 1e-3
        fit = oracle.fit_exponential(traj, "sigma_z")
        assert abs(fit.rate - gamma) / gamma < 0.15
        summary = analytic.relaxation_summary(p)
        assert abs(fit.rate - summary.gamma) / summary.gamma < 0.15

    def test_trajectory_bounds_and_columns(self, suite_params):
        grid = TimeGrid(0.0, 2.0, 8000)
        traj = analytic.integrate_sigma_z(-1.0, grid, suite_params, variant="full")
        s = traj["sigma_z"]
        assert np.all(s >= -1.0 - 1e-9) and np.all(s <= 1.0 + 1e-9)
        # field columns obey the interpolation rule endpoints
        n_m = analytic.photon_number(suite_params, -1)
        assert traj["photon_number"][0] == pytest.approx(n_m, rel=1e-12)
        amp_m = analytic.steady_field_amplitude(suite_params, -1)
        assert traj["re_a"][0] == pytest.approx(amp_m.real, rel=1e-12)
        assert traj["im_a"][0] == pytest.approx(amp_m.imag, abs=1e-12)

    def test_full_vs_reduced_divergence_bound(self, suite_params):
        # omega_qr/kappa = 400 >= 100; bounded residual of the dropped terms
        grid = TimeGrid(0.0, 4.0, 16000)
        full = analytic.integrate_sigma_z(-1.0, grid, suite_params, variant="full")
        red = analytic.integrate_sigma_z(-1.0, grid, suite_params, variant="reduced")
        div = np.max(np.abs(full["sigma_z"] - red["sigma_z"]))
        n_rb = analytic.photon_number(suite_params, -1)
        bound = 4.0 * suite_params.g**2 / suite_params.omega_qr**2 * (n_rb + 1.0) * 10.0
        assert div <= bound


class TestStationaryBath:
    @pytest.mark.parametrize("n_th, expected", [(0.0, 1.0), (0.5, 0.5), (1e9, 5e-10)])
    def test_values(self, n_th, expected):
        assert analytic.sigma_stationary_bath(n_th) == pytest.approx(expected, rel=1e-9)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            analytic.sigma_stationary_bath(-0.1)


class TestFidelityCurve:
    def test_short_time_limit(self, suite_params):
        assert analytic.fidelity_curve(1e-8, suite_params) == pytest.approx(1.0, abs=1e-12)

    def test_recovers_asymptotic_value(self, suite_params):
        tau = 1000.0 / abs(suite_params.omega_qr)
        with pytest.warns(errors.ValidityWarning):
            f = analytic.fidelity_curve(tau, suite_params)
        f_asym = analytic.fidelity_asymptotic(suite_params)
        assert abs(f - f_asym) <= (1.0 - f_asym) / (abs(suite_params.omega_qr) * tau) * 1.01

    def test_worked_value(self):
        # g/omega_qr = 0.1, n_r^b = 4, omega_qr*tau = 2*pi*1e3 -> F = 0.95
        p = SystemParams(omega_q=5100.0, omega_r=5000.0, omega_d=5001.0, g=10.0,
                         kappa=1.0, epsilon=1.0, n_th=0.0)
        assert analytic.photon_number(p, -1) == pytest.approx(4.0, rel=1e-14)
        tau = 2.0 * math.pi * 1e3 / p.omega_qr
        with pytest.warns(errors.ValidityWarning):
            f = analytic.fidelity_curve(tau, p)
        assert f == pytest.approx(0.95, abs=1e-4)

    def test_nonpositive_tau(self, suite_params):
        with pytest.raises(errors.NonPositiveTau):
            analytic.fidelity_curve(0.0, suite_params)

    def test_at_most_one_and_monotone(self, suite_params):
        taus = np.linspace(1e-3, 1.9, 50)
        values = [analytic.fidelity_curve(t, suite_params) for t in taus]
        assert all(v <= 1.0 for v in values)
        # monotone non-increasing in n_th (n_r^b grows)
        f_by_nth = [
            analytic.fidelity_curve(1.0, make_params(n_th=n)) for n in (0.0, 0.2, 0.5, 1.0)
        ]
        assert all(a > b for a, b in zip(f_by_nth, f_by_nth[1:]))
        # monotone decreasing in g^2 at eps = 0 (n_r^b then independent of g)
        f_by_g = [
            analytic.fidelity_curve(1.0, make_params(epsilon=0.0, g=g)) for g in (10.0, 20.0, 40.0)
        ]
        assert all(a > b for a, b in zip(f_by_g, f_by_g[1:]))


class TestFidelityNumeric:
    def test_no_coupling_gives_unity(self):
        p = simple(g=0.0)
        assert analytic.fidelity_numeric(0.5, p) == pytest.approx(1.0, abs=1e-14)

    def test_frozen_values_against_independent_integrator(self, suite_params):
        # frozen from an adaptive DOP853 + adaptive-quadrature evaluation
        expected = {0.2: 0.99157172, 0.5: 0.99103926, 1.0: 0.99006791}
        for tau, value in expected.items():
            assert analytic.fidelity_numeric(tau, suite_params) == pytest.approx(
                value, abs=5e-6
            )

    def test_monotone_in_thermal_occupancy(self):
        values = [
            analytic.fidelity_numeric(0.5, make_params(n_th=n)) for n in (0.0, 0.2, 0.6)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestMinMeasurementTime:
    def test_worked_values(self):
        assert analytic.min_measurement_time(0.95, 4.0, 100.0) == pytest.approx(0.5, rel=1e-14)
        assert analytic.min_measurement_time(0.5, 0.0, 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_divergence_towards_unit_fidelity(self):
        t95 = analytic.min_measurement_time(0.95, 4.0, 100.0)
        t999 = analytic.min_measurement_time(0.999, 4.0, 100.0)
        assert t999 == pytest.approx(50.0 * t95, rel=1e-12)

    @pytest.mark.parametrize("f", [0.0, 1.0, 1.2, -0.5])
    def test_range_errors(self, f):
        with pytest.raises(errors.FidelityOutOfRange):
            analytic.min_measurement_time(f, 1.0, 100.0)


class TestPhi:
    def test_no_drive_is_thermal(self):
        p = simple(n_th=0.35)
        assert analytic.phi(+1, p) == pytest.approx(0.85, rel=1e-14)
        assert analytic.phi(-1, p) == pytest.approx(0.85, rel=1e-14)

    def test_excited_resonant_peak(self):
        p = simple(omega_d=1001.0, epsilon=0.3, kappa=2.0, n_th=0.1)
        expected = 0.1 + 4.0 * 0.3**2 / 4.0 + 0.5  # lorentzian peak, zero shift term
        assert analytic.phi(-1, p) == pytest.approx(expected, rel=1e-14)

    def test_ground_sector_frozen_value(self):
        # chi = 1, kappa = 0.1, eps = 0.05, n_th = 0, drive at omega_r + chi;
        # independently evaluated with 30-digit arithmetic
        p = SystemParams(omega_q=5100.0, omega_r=5000.0, omega_d=5001.0, g=10.0,
                         kappa=0.1, epsilon=0.05, n_th=0.0)
        assert analytic.phi(+1, p) == pytest.approx(0.52560899437851343, rel=1e-12)


class TestRelaxationSummary:
    def test_no_drive_reduces_to_bath_result(self):
        for n_th in (0.0, 0.2, 1.7):
            p = make_params(epsilon=0.0, n_th=n_th)
            summary = analytic.relaxation_summary(p)
            exact = analytic.sigma_stationary_bath(n_th)
            assert abs(summary.sigma_st - exact) <= 1e-12 * abs(exact)
            gamma = p.kappa * (p.g / p.omega_qr) ** 2 * (1.0 + 2.0 * n_th)
            assert summary.gamma == pytest.approx(gamma, rel=1e-12)

    def test_no_drive_zero_temperature_rate(self):
        p = make_params(epsilon=0.0, n_th=0.0)
        assert analytic.relaxation_summary(p).gamma == pytest.approx(
            p.kappa * (p.g / p.omega_qr) ** 2, rel=1e-12
        )

    def test_strong_excited_resonant_drive_relaxes_to_ground(self):
        # chi = 5 kappa: phi- >> phi+ and sigma_st walks towards +1
        values = []
        for eps in (0.0, 2.0, 5.0, 10.0):
            p = SystemParams(omega_q=7000.0, omega_r=5000.0, omega_d=5005.0, g=100.0,
                             kappa=1.0, epsilon=eps, n_th=0.2)
            values.append(analytic.relaxation_summary(p).sigma_st)
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 0.85

    def test_ground_resonant_drive_relaxes_to_excited(self):
        # red-detuned for the excited sector: stay inside the validity range
        values = []
        for eps in (1.0, 2.0, 2.2):
            p = SystemParams(omega_q=7000.0, omega_r=5000.0, omega_d=4995.0, g=100.0,
                             kappa=1.0, epsilon=eps, n_th=0.0)
            values.append(analytic.relaxation_summary(p).sigma_st)
        assert all(b < a for a, b in zip(values, values[1:]))
        assert -1.0 <= values[-1] < -0.98

    def test_out_of_range_warns(self):
        p = SystemParams(omega_q=7000.0, omega_r=5000.0, omega_d=4995.0, g=100.0,
                         kappa=1.0, epsilon=3.0, n_th=0.0)
        with pytest.warns(errors.ValidityWarning):
            summary = analytic.relaxation_summary(p)
        assert summary.sigma_st < -1.0

    def test_ensemble_fixed_point(self, suite_params):
        summary = analytic.relaxation_summary(suite_params)
        scale = suite_params.kappa * (suite_params.g / suite_params.omega_qr) ** 2
        assert abs(analytic.ensemble_rate(summary.sigma_st, suite_params)) <= 1e-13 * scale


class TestEnsembleRelaxation:
    def test_endpoints(self, suite_params):
        grid = TimeGrid(0.0, 2000.0, 100)
        traj = analytic.ensemble_relaxation(-0.5, grid, suite_params)
        assert traj["sigma_z"][0] == pytest.approx(-0.5, abs=1e-15)
        summary = analytic.relaxation_summary(suite_params)
        decay = math.exp(-summary.gamma * grid.t_end)
        assert abs(traj["sigma_z"][-1] - summary.sigma_st) <= 1.5 * decay + 1e-12

    def test_far_detuned_strong_drive_relaxes_to_zero(self):
        values = []
        for eps in (0.0, 10.0, 30.0):
            p = simple(omega_d=1050.0, epsilon=eps, n_th=0.2)
            values.append(abs(analytic.relaxation_summary(p).sigma_st))
        assert values[1] < values[0] and values[2] < values[1]
        assert values[-1] < 0.05


class TestPhotonPeakShape:
    def test_argmax_and_fwhm(self):
        kappa = 1.0
        for sector in (+1, -1):
            omegas = np.arange(997.0, 1005.0, kappa / 200.0)
            n = np.array(
                [
                    analytic.photon_number(simple(omega_d=w, epsilon=0.7, n_th=0.1), sector)
                    for w in omegas
                ]
            )
            expected_peak = 1000.0 - 1.0 * sector  # omega_r - chi*sigma_z
            assert abs(omegas[np.argmax(n)] - expected_peak) <= kappa / 200.0 + 1e-9
            drive = n - 0.1
            half = drive.max() / 2.0
            above = omegas[drive >= half]
            fwhm = above[-1] - above[0]
            assert abs(fwhm - kappa) / kappa < 0.02
