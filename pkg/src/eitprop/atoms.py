"""Atomic constants, drive configuration, and level-scheme data.

Unit conventions used across the package:

* all rates and frequencies are in units of the excited-state linewidth
  ``Gamma`` (so ``gamma == 1`` for the default scheme),
* time is measured in ``1/Gamma``,
* the medium length is normalized to 1 unless stated otherwise.

The default level scheme is the Rb-87 D2 line with ground states
``|1> = 5S1/2,F=1`` and ``|2> = 5S1/2,F=2`` and excited states
``|3> = 5P3/2,F'=1``, ``|4> = F'=0``, ``|5> = F'=2``.  The ``F'=3`` level is
adiabatically eliminated and enters only through an intensity-dependent
two-photon (Stark) shift of the control detunings.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

# Physical scales of the Rb-87 D2 line (SI), used only for unit conversion
# and for the thermal Doppler scale.  Everything else runs in Gamma units.
GAMMA_RAD_PER_S = 2.0 * math.pi * 6.07e6      # excited-state linewidth (rad/s)
WAVELENGTH_M = 780.241e-9                      # D2 wavelength
MASS_KG = 86.909180531 * 1.66053906660e-27     # Rb-87 atomic mass
KB = 1.380649e-23

#: one microsecond expressed in units of 1/Gamma
MICROSECOND = 1e-6 * GAMMA_RAD_PER_S

#: ground-state hyperfine splitting in units of Gamma (6.835 GHz / 6.07 MHz)
DELTA_OMEGA_21 = 6834.682610904 / 6.07

# Relative hyperfine strength factors S_FF' reconstructed from 6-j algebra
# (see tests for the generating oracle).  Exact rationals:
#   F=1: S_10 = 1/6, S_11 = 5/12, S_12 = 5/12
#   F=2: S_21 = 1/20, S_22 = 1/4, S_23 = 7/10
S_FF = {
    (1, 0): (1, 6), (1, 1): (5, 12), (1, 2): (5, 12), (1, 3): (0, 1),
    (2, 0): (0, 1), (2, 1): (1, 20), (2, 2): (1, 4), (2, 3): (7, 10),
}


def microseconds(t_us):
    """Convert a duration in microseconds to units of 1/Gamma."""
    return t_us * MICROSECOND


def thermal_velocity(theta_k):
    """Most probable thermal speed sqrt(2 kB T / m) in m/s."""
    return math.sqrt(2.0 * KB * theta_k / MASS_KG)


def doppler_scale(theta_k):
    """Dimensionless Doppler scale k*vbar/Gamma for temperature ``theta_k``."""
    if theta_k <= 0.0:
        return 0.0
    k = 2.0 * math.pi / WAVELENGTH_M
    return k * thermal_velocity(theta_k) / GAMMA_RAD_PER_S


def thermal_cloud_radius(theta_k, sigma_pc, trap_depth_k=1.95e-3):
    """Radial 1/e cloud radius of a thermal ensemble in a Gaussian-beam trap.

    Harmonic expansion of the trap bottom gives
    ``sigma_a = sigma_pc * sqrt(theta / (2 * depth))``.  The default effective
    depth is well below the nominal trap depth because the trap is switched
    off during the probing windows and the cloud expands ballistically.
    """
    return sigma_pc * math.sqrt(theta_k / (2.0 * trap_depth_k))


class EliminationError(ValueError):
    """Control detuning too close to the eliminated level for adiabatic elimination."""


class WeakProbeWarning(UserWarning):
    """Probe amplitude not small compared to the active control amplitude."""


@dataclass(frozen=True)
class LevelScheme:
    """Atomic constants of the 5(+1)-level ladder, in units of ``gamma``.

    ``s_tilde_*`` are relative hyperfine strength factors normalized to the
    ``|1>-|3>`` (probe) and ``|2>-|3>`` (control) transitions respectively;
    ``s_tilde_13 == s_tilde_23 == 1`` by that convention and is not stored.
    """

    gamma: float = 1.0
    delta_34: float = 0.0
    delta_35: float = 0.0
    delta_36: float = 0.0
    delta_omega_21: float = 0.0
    s_tilde_14: float = 0.0
    s_tilde_15: float = 0.0
    s_tilde_25: float = 0.0
    s_tilde_26: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        for name in ("s_tilde_14", "s_tilde_15", "s_tilde_25", "s_tilde_26"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    def reduced(self, *, keep_f0=False, keep_f2=False, keep_f3=False) -> "LevelScheme":
        """Copy of the scheme with off-resonant channels selectively disabled.

        Useful for the two-level (all off) and ideal three-level limits.
        """
        return replace(
            self,
            s_tilde_14=self.s_tilde_14 if keep_f0 else 0.0,
            s_tilde_15=self.s_tilde_15 if keep_f2 else 0.0,
            s_tilde_25=self.s_tilde_25 if keep_f2 else 0.0,
            s_tilde_26=self.s_tilde_26 if keep_f3 else 0.0,
        )


def default_rb87_d2() -> LevelScheme:
    """Rb-87 D2 constants in units of Gamma = 2pi x 6.07 MHz.

    Excited-state splittings are relative to ``|3> = F'=1`` using the
    hyperfine intervals 72.218 MHz (0-1), 156.947 MHz (1-2) and
    266.650 MHz (2-3).  Strength factors follow from ``S_FF`` above.
    """
    g_mhz = 6.07
    return LevelScheme(
        gamma=1.0,
        delta_34=-72.218 / g_mhz,
        delta_35=156.947 / g_mhz,
        delta_36=(156.947 + 266.650) / g_mhz,
        delta_omega_21=DELTA_OMEGA_21,
        s_tilde_14=math.sqrt((S_FF[1, 0][0] * S_FF[1, 1][1]) / (S_FF[1, 0][1] * S_FF[1, 1][0])),
        s_tilde_15=math.sqrt((S_FF[1, 2][0] * S_FF[1, 1][1]) / (S_FF[1, 2][1] * S_FF[1, 1][0])),
        s_tilde_25=math.sqrt((S_FF[2, 2][0] * S_FF[2, 1][1]) / (S_FF[2, 2][1] * S_FF[2, 1][0])),
        s_tilde_26=math.sqrt((S_FF[2, 3][0] * S_FF[2, 1][1]) / (S_FF[2, 3][1] * S_FF[2, 1][0])),
    )


def stark_shift(omega_c_plus, omega_c_minus, scheme: LevelScheme,
                delta_c_plus=0.0, delta_c_minus=0.0, eps=1e-6):
    """Two-photon Stark shift from the adiabatically eliminated upper level.

    Each control contributes ``-|s26 * Omega|^2 / (4 (delta_36 - delta_c))``;
    the total shift is the sum of both contributions (a single control gives
    only its own term).  Raises :class:`EliminationError` when a driven
    control sits within ``eps`` of the eliminated level, where the
    elimination is invalid.
    """
    total = 0.0
    for omega, delta_c in ((omega_c_plus, delta_c_plus), (omega_c_minus, delta_c_minus)):
        w2 = np.abs(np.asarray(omega)) ** 2 * scheme.s_tilde_26 ** 2
        if np.all(w2 == 0.0):
            continue
        den = np.asarray(scheme.delta_36 - np.asarray(delta_c), float)
        worst = float(np.min(np.abs(den)))
        if worst < eps:
            raise EliminationError(
                f"|delta_36 - delta_c| = {worst:.3g} < {eps:.3g}: "
                "adiabatic elimination invalid")
        total = total - w2 / (4.0 * den)
    return total


def stark_compensated_control_detuning(omega_c, scheme: LevelScheme, tol=1e-12):
    """Control detuning that places the two-photon resonance at delta_p = 0.

    Solves ``delta_c = -stark_shift(omega_c, 0, scheme, delta_c)``
    self-consistently, mirroring how the control detuning is chosen in the
    experiments to compensate the two-photon Stark shift.
    """
    dc = 0.0
    for _ in range(200):
        new = -stark_shift(omega_c, 0.0, scheme, dc, 0.0)
        if abs(new - dc) < tol:
            return new
        dc = new
    return dc


# ---------------------------------------------------------------------------
# drive envelopes


def constant(value):
    """Envelope with a fixed complex value."""
    def env(t):
        t = np.asarray(t, float)
        out = np.full(t.shape, value, complex) if t.shape else complex(value)
        return out
    return env


def gaussian_pulse(peak, center, fwhm):
    """Gaussian amplitude envelope with the given intensity FWHM (1/Gamma)."""
    def env(t):
        t = np.asarray(t, float)
        return peak * np.exp(-2.0 * math.log(2.0) * ((t - center) / fwhm) ** 2)
    return env


def _smooth_step(x):
    x = np.clip(x, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * x))


def smooth_steps(times, levels, ramp):
    """Piecewise-constant schedule with raised-cosine transitions.

    ``levels[0]`` holds before ``times[0]``; each ``times[k]`` starts a smooth
    transition of duration ``ramp`` to ``levels[k+1]``.  ``len(levels)`` must
    be ``len(times) + 1``.
    """
    if len(levels) != len(times) + 1:
        raise ValueError("need len(levels) == len(times) + 1")
    times = [float(t) for t in times]
    levels = [complex(v) for v in levels]

    def env(t):
        t = np.asarray(t, float)
        v = np.full(t.shape, levels[0], complex) if t.shape else levels[0]
        for tk, lo, hi in zip(times, levels[:-1], levels[1:]):
            v = v + (hi - lo) * _smooth_step((t - tk) / ramp)
        return v
    return env


def as_envelope(value):
    """Wrap scalars as constant envelopes; pass callables through."""
    if callable(value):
        return value
    return constant(value)


@dataclass
class DriveConfig:
    """Optical drive: control/probe envelopes and carrier detunings.

    Envelopes may be given as scalars (CW) or callables of time; detunings
    are carrier detunings in units of Gamma.  ``zeta`` and
    ``delta_two_photon`` are derived, which enforces the four-wave-mixing
    energy-conservation relation by construction.
    """

    omega_c_plus: object = 0.0
    omega_c_minus: object = 0.0
    omega_p_input: object = 0.0
    delta_c_plus: float = 0.0
    delta_c_minus: float = 0.0
    delta_p: float = 0.0
    #: reference control intensity |Oc+|^2 + |Oc-|^2 at which gamma_inh is
    #: quoted; None means the peak intensity over the simulated window.
    gamma_inh_ref_intensity: float | None = None
    #: optional protocol timestamps (e.g. control_off, control_on,
    #: backward_on, backward_off) used for analysis windows.
    events: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega_c_plus = as_envelope(self.omega_c_plus)
        self.omega_c_minus = as_envelope(self.omega_c_minus)
        self.omega_p_input = as_envelope(self.omega_p_input)

    @property
    def zeta(self):
        """Relative control detuning delta_c_minus - delta_c_plus."""
        return self.delta_c_minus - self.delta_c_plus

    @property
    def delta_two_photon(self):
        """Two-photon detuning delta_p - delta_c_plus (forward pair)."""
        return self.delta_p - self.delta_c_plus

    def control_intensity(self, t):
        """|Oc+(t)|^2 + |Oc-(t)|^2."""
        return (np.abs(self.omega_c_plus(t)) ** 2
                + np.abs(self.omega_c_minus(t)) ** 2)

    def check_weak_probe(self, t_grid, ratio=0.1, active_fraction=0.05):
        """Warn when max |Op| exceeds ``ratio`` of the weakest active control.

        "Active" means control amplitude above ``active_fraction`` of its own
        peak; the probe should stay well below the control wherever the
        control is on.
        """
        t_grid = np.asarray(t_grid, float)
        peak_p = float(np.max(np.abs(self.omega_p_input(t_grid))))
        cp = np.abs(self.omega_c_plus(t_grid))
        cm = np.abs(self.omega_c_minus(t_grid))
        ctot = np.maximum(cp, cm)
        peak_c = float(np.max(ctot)) if ctot.size else 0.0
        if peak_c == 0.0:
            return
        active = ctot >= active_fraction * peak_c
        min_active = float(np.min(ctot[active]))
        if min_active > 0.0 and peak_p / min_active > ratio:
            warnings.warn(
                f"probe/control amplitude ratio {peak_p / min_active:.2f} "
                f"exceeds {ratio}: outside the weak-probe regime",
                WeakProbeWarning, stacklevel=2)
