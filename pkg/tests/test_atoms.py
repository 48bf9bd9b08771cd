"""Atomic constants, strength factors and drive envelopes."""
import math

import numpy as np
import pytest

from eitprop.atoms import (DriveConfig, EliminationError, LevelScheme,
                           MICROSECOND, S_FF, WeakProbeWarning, constant,
                           default_rb87_d2, doppler_scale, gaussian_pulse,
                           microseconds, smooth_steps,
                           stark_compensated_control_detuning, stark_shift,
                           thermal_cloud_radius)


def wigner_6j_strengths():
    """Independent oracle: S_FF' = (2F'+1)(2J+1) {J J' 1; F' F I}^2."""
    sympy = pytest.importorskip("sympy")
    from sympy import Rational
    from sympy.physics.wigner import wigner_6j

    J, Jp, I = Rational(1, 2), Rational(3, 2), Rational(3, 2)
    out = {}
    for F in (1, 2):
        for Fp in (0, 1, 2, 3):
            w = wigner_6j(J, Jp, 1, Fp, F, I)
            out[(F, Fp)] = sympy.simplify((2 * Fp + 1) * (2 * J + 1) * w ** 2)
    return out


def test_strength_factor_table_matches_6j_oracle():
    oracle = wigner_6j_strengths()
    for key, (num, den) in S_FF.items():
        assert oracle[key] == pytest.approx(num / den, abs=0)


def test_strength_factor_sum_rule():
    # completeness: sum over F' of the reconstructed strengths is 1 per F
    for f in (1, 2):
        total = sum(num / den for (ff, _), (num, den) in S_FF.items() if ff == f)
        assert abs(total - 1.0) < 1e-12

    s = default_rb87_d2()
    # reconstruct from the normalized factors: S_1F' = s_tilde^2 * S_11 etc.
    s11 = 5.0 / 12.0
    assert abs(s11 * (s.s_tilde_14 ** 2 + 1.0 + s.s_tilde_15 ** 2) - 1.0) < 1e-12
    s21 = 1.0 / 20.0
    assert abs(s21 * (1.0 + s.s_tilde_25 ** 2 + s.s_tilde_26 ** 2) - 1.0) < 1e-12


def test_default_scheme_constants():
    s = default_rb87_d2()
    assert s.gamma == 1.0
    # ground splitting 6.835 GHz over 6.07 MHz
    assert s.delta_omega_21 == pytest.approx(1126.0, abs=0.5)
    assert s.s_tilde_14 == pytest.approx(math.sqrt(2.0 / 5.0), rel=1e-12)
    assert s.s_tilde_15 == 1.0
    assert s.s_tilde_25 == pytest.approx(math.sqrt(5.0), rel=1e-12)
    assert s.s_tilde_26 == pytest.approx(math.sqrt(14.0), rel=1e-12)
    assert s.delta_34 < 0 < s.delta_35 < s.delta_36


def test_time_and_doppler_conversions():
    gamma = 2.0 * math.pi * 6.07e6
    assert microseconds(1.0) == pytest.approx(1e-6 * gamma, rel=1e-12)
    assert MICROSECOND == pytest.approx(38.139, rel=1e-3)
    # independent arithmetic at 450 uK
    kb, m = 1.380649e-23, 86.909180531 * 1.66053906660e-27
    vbar = math.sqrt(2 * kb * 450e-6 / m)
    expect = (2 * math.pi / 780.241e-9) * vbar / gamma
    assert doppler_scale(450e-6) == pytest.approx(expect, rel=1e-12)
    assert doppler_scale(0.0) == 0.0


def test_thermal_cloud_radius_scaling():
    r1 = thermal_cloud_radius(450e-6, 1.0)
    r2 = thermal_cloud_radius(900e-6, 1.0)
    assert r2 == pytest.approx(math.sqrt(2.0) * r1, rel=1e-12)


class TestStarkShift:
    def test_zero_fields(self):
        s = default_rb87_d2()
        assert stark_shift(0.0, 0.0, s, 5.0, -3.0) == 0.0

    def test_direct_substitution(self):
        # |s26 * Oc|^2 = 4 with delta_36 - delta_c = 4 -> -4/16
        s = LevelScheme(gamma=1.0, delta_36=4.0, s_tilde_26=1.0)
        assert stark_shift(2.0, 0.0, s, 0.0, 0.0) == pytest.approx(-0.25)

    def test_antisymmetric_detunings_cancel(self):
        s = LevelScheme(gamma=1.0, delta_36=0.0, s_tilde_26=1.0)
        val = stark_shift(2.0, 2.0, s, -4.0, 4.0)
        assert val == pytest.approx(0.0, abs=1e-15)

    def test_sign_vs_detuning(self):
        s = default_rb87_d2()
        assert stark_shift(3.0, 0.0, s, 10.0, 0.0) < 0.0     # below the level
        assert stark_shift(3.0, 0.0, s, s.delta_36 + 5.0, 0.0) > 0.0

    def test_quadratic_scaling(self):
        s = default_rb87_d2()
        a = stark_shift(1.5, 0.0, s, 2.0, 0.0)
        b = stark_shift(3.0, 0.0, s, 2.0, 0.0)
        assert b == pytest.approx(4.0 * a, rel=1e-14)

    def test_elimination_singularity(self):
        s = default_rb87_d2()
        with pytest.raises(EliminationError):
            stark_shift(1.0, 0.0, s, s.delta_36 + 1e-9, 0.0)
        # zero control does not probe the singular denominator
        assert stark_shift(0.0, 0.0, s, s.delta_36, 0.0) == 0.0

    def test_compensated_detuning_fixed_point(self):
        s = default_rb87_d2()
        dc = stark_compensated_control_detuning(3.7, s)
        assert dc == pytest.approx(-stark_shift(3.7, 0.0, s, dc, 0.0), abs=1e-10)


class TestEnvelopes:
    def test_gaussian_intensity_fwhm(self):
        env = gaussian_pulse(0.5, 10.0, 4.0)
        ratio = abs(env(12.0)) ** 2 / abs(env(10.0)) ** 2
        assert ratio == pytest.approx(0.5, rel=1e-12)

    def test_smooth_steps_levels_and_ramp(self):
        env = smooth_steps([5.0, 10.0], [0.0, 2.0, 0.5], ramp=1.0)
        assert env(0.0) == 0.0
        assert env(6.5) == pytest.approx(2.0)
        assert env(20.0) == pytest.approx(0.5)
        assert env(5.5) == pytest.approx(1.0)  # raised-cosine midpoint
        t = np.linspace(0, 20, 2001)
        v = env(t)
        assert np.max(np.abs(np.diff(v))) < 2.0 * np.pi * 0.011  # no jumps

    def test_constant_vectorizes(self):
        env = constant(1.5 + 0.5j)
        out = env(np.array([0.0, 1.0]))
        assert out.shape == (2,) and out[0] == 1.5 + 0.5j


class TestDriveConfig:
    def test_derived_detunings(self):
        d = DriveConfig(delta_c_plus=1.0, delta_c_minus=-2.5, delta_p=0.45)
        assert d.zeta == pytest.approx(-3.5)
        assert d.delta_two_photon == pytest.approx(-0.55)

    def test_weak_probe_warning(self):
        t = np.linspace(0, 10, 101)
        d = DriveConfig(omega_c_plus=1.0, omega_p_input=0.5)
        with pytest.warns(WeakProbeWarning):
            d.check_weak_probe(t)
        quiet = DriveConfig(omega_c_plus=2.0, omega_p_input=0.02)
        quiet.check_weak_probe(t)  # no warning

    def test_no_warning_without_controls(self):
        d = DriveConfig(omega_p_input=0.5)
        d.check_weak_probe(np.linspace(0, 10, 11))


def test_scheme_validation():
    with pytest.raises(ValueError):
        LevelScheme(gamma=0.0)
    with pytest.raises(ValueError):
        LevelScheme(gamma=1.0, s_tilde_14=-0.1)
    s = default_rb87_d2()
    r = s.reduced(keep_f0=True)
    assert r.s_tilde_14 == s.s_tilde_14 and r.s_tilde_25 == 0.0
