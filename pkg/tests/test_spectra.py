"""Analytic spectra against independent steady-state oracles and limits."""
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from eitprop.atoms import DriveConfig, default_rb87_d2, stark_shift
from eitprop.spectra import (MediumConfig, QuadratureSpec, QuadratureWarning,
                             absorption_coefficient, transmission_homogeneous,
                             transmission_inhomogeneous, write_spectrum_csv)

SCHEME = default_rb87_d2()


def bloch_steady_alpha_ode(delta_p, omega_c, delta_c, gamma_21, t_end=4000.0):
    """Brute-force oracle: integrate the 4 forward-field Bloch equations to
    steady state and read off alpha = -2i (rho31 + s14 rho41 + s15 rho51)/Op.

    Written directly from the coupled equations, independently of the
    closed-form expression under test.
    """
    s = SCHEME
    op = 1e-3
    oc = omega_c
    ds = stark_shift(oc, 0.0, s, delta_c, 0.0)
    delta = delta_p - delta_c - ds

    def rhs(_t, y):
        r21, r31, r41, r51 = y[0] + 1j * y[1], y[2] + 1j * y[3], y[4] + 1j * y[5], y[6] + 1j * y[7]
        d21 = -(gamma_21 / 2 - 1j * delta) * r21 + 0.5j * np.conj(oc) * (
            r31 + s.s_tilde_25 * r51)
        d31 = -(0.5 - 1j * delta_p) * r31 + 0.5j * op + 0.5j * oc * r21
        d41 = -(0.5 - 1j * (delta_p - s.delta_34)) * r41 + 0.5j * s.s_tilde_14 * op
        d51 = (-(0.5 - 1j * (delta_p - s.delta_35)) * r51
               + 0.5j * s.s_tilde_15 * op + 0.5j * s.s_tilde_25 * oc * r21)
        out = np.empty(8)
        out[0::2] = [d21.real, d31.real, d41.real, d51.real]
        out[1::2] = [d21.imag, d31.imag, d41.imag, d51.imag]
        return out

    sol = solve_ivp(rhs, (0.0, t_end), np.zeros(8), method="BDF",
                    rtol=1e-11, atol=1e-14)
    y = sol.y[:, -1]
    r31, r41, r51 = y[2] + 1j * y[3], y[4] + 1j * y[5], y[6] + 1j * y[7]
    return -2j * (r31 + s.s_tilde_14 * r41 + s.s_tilde_15 * r51) / op


class TestAbsorptionCoefficient:
    def test_two_level_resonance(self):
        two = SCHEME.reduced()
        a = absorption_coefficient(0.0, 0.0, 0.0, two, 0.0)
        assert a.alpha == pytest.approx(2.0)
        med = MediumConfig(od=20.0, theta=0.0)
        drv = DriveConfig(omega_c_plus=0.0)
        t = transmission_homogeneous(0.0, med, drv, two)
        assert t == pytest.approx(np.exp(-20.0), rel=1e-12)

    def test_ideal_three_level_dark_state(self):
        three = SCHEME.reduced()  # all off-resonant channels disabled
        a = absorption_coefficient(0.0, 2.0, 0.0, three, 0.0)
        assert a.alpha == pytest.approx(0.0, abs=1e-15)

    def test_against_ode_steady_state_oracle(self):
        a = absorption_coefficient(1.0, 4.5, 0.0, SCHEME, 0.01)
        oracle = bloch_steady_alpha_ode(1.0, 4.5, 0.0, 0.01)
        assert abs(a.alpha - oracle) / abs(oracle) < 1e-6
        # frozen value from the oracle, as a drift sentinel
        assert a.alpha == pytest.approx(0.5207102499 - 0.6769386381j, rel=1e-7)

    @pytest.mark.parametrize("dp,oc,dc,g21", [
        (-2.3, 1.7, 0.4, 0.003), (0.6, 6.0, 1.8, 0.02), (3.1, 0.7, -1.0, 0.0),
    ])
    def test_more_oracle_points(self, dp, oc, dc, g21):
        a = absorption_coefficient(dp, oc, dc, SCHEME, g21)
        oracle = bloch_steady_alpha_ode(dp, oc, dc, g21)
        assert abs(a.alpha - oracle) / abs(oracle) < 1e-6

    def test_passivity_of_real_part(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            dp = rng.uniform(-30, 30)
            oc = rng.uniform(0, 8)
            dc = rng.uniform(-3, 3)
            g21 = rng.uniform(0, 0.1)
            kv = rng.uniform(-0.3, 0.3)
            a = absorption_coefficient(dp, oc, dc, SCHEME, g21, doppler_v=kv)
            assert np.real(a.alpha) >= -1e-12


class TestHomogeneousTransmission:
    def test_empty_medium(self):
        med = MediumConfig(od=0.0, theta=0.0)
        drv = DriveConfig(omega_c_plus=1.0)
        dps = np.linspace(-5, 5, 21)
        assert np.allclose(transmission_homogeneous(dps, med, drv, SCHEME), 1.0)

    def test_bare_high_od_opaque_band(self):
        med = MediumConfig(od=400.0, theta=0.0, gamma_trd=0.008)
        drv = DriveConfig(omega_c_plus=0.0)
        dps = np.linspace(-4.5, 4.5, 81)
        t = transmission_homogeneous(dps, med, drv, SCHEME)
        assert np.max(t) < 0.05

    def test_bounds_and_monotonicity_in_od(self):
        drv = DriveConfig(omega_c_plus=3.0, delta_c_plus=0.5)
        dps = np.linspace(-6, 6, 41)
        prev = None
        for od in (1.0, 10.0, 50.0, 200.0):
            med = MediumConfig(od=od, theta=0.0, gamma_trd=0.01)
            t = transmission_homogeneous(dps, med, drv, SCHEME)
            assert np.all(t >= 0.0) and np.all(t <= 1.0)
            if prev is not None:
                assert np.all(t <= prev + 1e-12)
            prev = t


class TestInhomogeneousTransmission:
    def test_point_ensemble_limit_matches_homogeneous(self):
        med = MediumConfig(od=30.0, theta=0.0, gamma_trd=0.005,
                           sigma_pc=1.0, sigma_a=1e-4, k_thermal=0.0)
        drv = DriveConfig(omega_c_plus=3.5, delta_c_plus=0.7)
        dps = np.linspace(-2, 2, 31)
        t_inh = transmission_inhomogeneous(dps, med, drv, SCHEME)
        t_hom = transmission_homogeneous(dps, med, drv, SCHEME)
        assert np.max(np.abs(t_inh - t_hom)) < 1e-4

    def test_cold_limit_equals_zero_velocity(self):
        med_c = MediumConfig(od=50.0, theta=0.0, gamma_trd=0.005,
                             sigma_a=0.3, k_thermal=0.0)
        med_t = MediumConfig(od=50.0, theta=1e-12, gamma_trd=0.005, sigma_a=0.3)
        drv = DriveConfig(omega_c_plus=3.0, delta_c_plus=0.5)
        dps = np.linspace(-1, 2, 21)
        a = transmission_inhomogeneous(dps, med_c, drv, SCHEME)
        b = transmission_inhomogeneous(dps, med_t, drv, SCHEME)
        assert np.max(np.abs(a - b)) < 1e-10

    def test_two_photon_resonance_is_doppler_free(self):
        # at the Stark-corrected two-photon resonance the absorption is
        # stationary against velocity to first order
        oc, dc = 3.0, 0.5
        ds = stark_shift(oc, 0.0, SCHEME, dc, 0.0)
        dp = dc + ds
        dv = 1e-3
        a_p = absorption_coefficient(dp, oc, dc, SCHEME, 0.01, doppler_v=+dv)
        a_m = absorption_coefficient(dp, oc, dc, SCHEME, 0.01, doppler_v=-dv)
        slope = abs(a_p.alpha - a_m.alpha) / (2 * dv)
        a_res = abs(absorption_coefficient(dp, oc, dc, SCHEME, 0.01).alpha)
        # compare with the scale of variation off two-photon resonance
        a_off = absorption_coefficient(dp + dv, oc, dc, SCHEME, 0.01, doppler_v=0.0)
        slope_2ph = abs(a_off.alpha - a_res) / dv
        assert slope < 0.05 * slope_2ph

    def test_moderate_od_near_complete_transparency(self):
        med = MediumConfig(od=20.0, theta=550e-6, gamma_trd=0.008,
                           sigma_pc=1.0, sigma_a=0.3759)
        drv = DriveConfig(omega_c_plus=4.5, delta_c_plus=0.7)
        dps = np.linspace(-1.5, 1.5, 61)
        t = transmission_inhomogeneous(dps, med, drv, SCHEME)
        assert float(np.max(t)) >= 0.9

    def test_peak_shifts_with_stark_term(self):
        # disabling the eliminated-level channel moves the EIT peak by the
        # Stark shift (within 5 % at Omega_c = 6).  Measured on the
        # lambda-plus-eliminated-level reduction: the far-detuned F'=0 and
        # F'=2 channels add a sloped background that drags the broad maximum
        # by more than the tolerance and would mask the effect under test.
        oc, dc = 6.0, 1.8
        med = MediumConfig(od=50.0, theta=0.0, gamma_trd=0.005,
                           sigma_a=1e-4, k_thermal=0.0)
        drv = DriveConfig(omega_c_plus=oc, delta_c_plus=dc)
        ds = stark_shift(oc, 0.0, SCHEME, dc, 0.0)
        dps = np.linspace(dc + ds - 1.0, dc + 1.0, 4001)
        with_f3 = SCHEME.reduced(keep_f3=True)
        no_f3 = SCHEME.reduced()
        t_full = transmission_inhomogeneous(dps, med, drv, with_f3)
        t_off = transmission_inhomogeneous(dps, med, drv, no_f3)
        shift = dps[np.argmax(t_full)] - dps[np.argmax(t_off)]
        assert shift == pytest.approx(ds, rel=0.05)

    def test_quadrature_convergence_warning(self):
        med = MediumConfig(od=200.0, theta=450e-6, gamma_trd=0.008, sigma_a=0.34)
        drv = DriveConfig(omega_c_plus=5.0, delta_c_plus=1.0)
        with pytest.warns(QuadratureWarning):
            transmission_inhomogeneous(
                0.0, med, drv, SCHEME,
                QuadratureSpec(radial_nodes=2, velocity_nodes=2))


def test_spectrum_csv_format(tmp_path):
    path = tmp_path / "spec.csv"
    write_spectrum_csv(path, [0.0, 0.5], [1.0, 0.25])
    lines = path.read_text().splitlines()
    assert lines[0] == "# format_version=1"
    assert lines[1] == "delta_p_over_gamma,transmission"
    assert lines[2] == "0,1" and lines[3] == "0.5,0.25"
