"""Steady-state absorption and transmission spectra of the driven 5-level medium.

Two evaluation paths are provided: a strictly 1D homogeneous medium
(:func:`transmission_homogeneous`) and a radially inhomogeneous,
thermally averaged medium (:func:`transmission_inhomogeneous`) where the
control Rabi frequency and the atomic density carry Gaussian radial
profiles and the detunings carry one-photon Doppler shifts.

The optical depth ``od`` is the measured resonant optical depth of the bare
medium.  The radial average is therefore normalized by the density- and
probe-mode-weighted measure, which makes the point-ensemble limit
(``sigma_a -> 0``, ``theta -> 0``) reduce exactly to the homogeneous result
evaluated with the on-axis control.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss

from .atoms import LevelScheme, DriveConfig, doppler_scale, stark_shift


class QuadratureWarning(UserWarning):
    """Doubling the quadrature nodes changed the result beyond tolerance."""


@dataclass(frozen=True)
class MediumConfig:
    """Geometry, optical depth and decoherence of the atomic medium.

    ``sigma_pc`` and ``sigma_a`` are the 1/e^2 intensity mode radius and the
    1/e density radius in a common (arbitrary) transverse unit; only their
    ratio matters.  ``k_thermal`` is the Doppler scale k*vbar/Gamma and is
    derived from ``theta`` when not given.  ``phi_pm`` is the accumulated
    ground-state phase mismatch over the medium length (dimensionless),
    relevant only to backward-field generation in pulse propagation.
    """

    od: float
    theta: float = 0.0
    gamma_trd: float = 0.0
    gamma_inh: float = 0.0
    sigma_pc: float = 1.0
    sigma_a: float = 0.34
    length: float = 1.0
    k_thermal: float | None = None
    phi_pm: float = 14.3245

    def __post_init__(self):
        if self.od < 0.0:
            raise ValueError("od must be non-negative")
        if self.sigma_pc <= 0.0 or self.sigma_a <= 0.0 or self.length <= 0.0:
            raise ValueError("sigma_pc, sigma_a and length must be positive")
        if self.gamma_trd < 0.0 or self.gamma_inh < 0.0:
            raise ValueError("decoherence rates must be non-negative")
        if self.theta < 0.0:
            raise ValueError("theta must be non-negative")
        if self.k_thermal is None:
            object.__setattr__(self, "k_thermal", doppler_scale(self.theta))

    @property
    def gamma_21(self):
        """Total ground-state decoherence rate gamma_trd + gamma_inh."""
        return self.gamma_trd + self.gamma_inh


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the radial (Gauss-Legendre) and velocity
    (Gauss-Hermite) integrals of the inhomogeneous transmission."""

    radial_nodes: int = 48
    velocity_nodes: int = 16
    rmax_factor: float = 4.0
    check_convergence: bool = True
    convergence_tol: float = 1e-4

    def __post_init__(self):
        if self.radial_nodes < 2 or self.velocity_nodes < 2:
            raise ValueError("quadrature orders must be >= 2")


@dataclass(frozen=True)
class ComplexAbsorption:
    """Complex absorption coefficient (units 1/Gamma) at one probe detuning."""

    alpha: complex
    detuning: float


def _alpha(delta_p, omega_c, delta_c, scheme: LevelScheme, gamma_21, doppler_kv=0.0):
    """Vectorized complex absorption coefficient.

    ``doppler_kv`` is the one-photon Doppler shift k*v of a velocity class;
    the co-propagating probe and control are shifted identically, so the
    two-photon denominator is Doppler-free.
    """
    dp = np.asarray(delta_p) - doppler_kv
    dc = delta_c - doppler_kv
    a3 = 1.0 / (0.5 - 1j * dp)
    a4 = 1.0 / (0.5 - 1j * (dp - scheme.delta_34))
    a5 = 1.0 / (0.5 - 1j * (dp - scheme.delta_35))
    ds = stark_shift(omega_c, 0.0, scheme, dc, 0.0)
    # D = 1/B of the two-photon resonance denominator
    d = 4.0 * (gamma_21 / 2.0 - 1j * (np.asarray(delta_p) - delta_c - ds))
    w = np.abs(omega_c) ** 2
    s14, s15, s25 = scheme.s_tilde_14, scheme.s_tilde_15, scheme.s_tilde_25
    num = d * (a3 + s15 ** 2 * a5) + a3 * a5 * abs(s15 - s25) ** 2 * w
    den = d + (a3 + s25 ** 2 * a5) * w
    # den vanishes only for omega_c == 0 at exact two-photon resonance with
    # gamma_21 == 0; the limit is the undriven two-level-like response.
    bad = np.abs(den) == 0.0
    if np.any(bad):
        num = np.where(bad, a3 + s15 ** 2 * a5, num)
        den = np.where(bad, 1.0, den)
    return s14 ** 2 * a4 + num / den


def absorption_coefficient(delta_p, omega_c, delta_c, scheme: LevelScheme,
                           gamma_21, doppler_v=0.0) -> ComplexAbsorption:
    """Steady-state complex absorption coefficient at probe detuning ``delta_p``.

    Parameters
    ----------
    delta_p, delta_c : float
        Probe and control one-photon detunings (Gamma units).
    omega_c : complex
        Control Rabi frequency.
    gamma_21 : float
        Ground-state decoherence rate.
    doppler_v : float
        One-photon Doppler shift k*v of the velocity class.

    The Stark shift of the eliminated level is folded into the two-photon
    denominator.  ``Re(alpha) >= 0`` for any physical parameter set.
    """
    a = _alpha(delta_p, omega_c, delta_c, scheme, gamma_21, doppler_v)
    if np.ndim(a) == 0:
        a = complex(a)
    return ComplexAbsorption(alpha=a, detuning=delta_p)


def _cw_control(drive: DriveConfig):
    return complex(np.asarray(drive.omega_c_plus(0.0)).reshape(-1)[0])


def transmission_homogeneous(delta_p, medium: MediumConfig, drive: DriveConfig,
                             scheme: LevelScheme, effective=None):
    """Intensity transmission of the homogeneous 1D medium.

    ``T = exp(-Gamma/2 * OD * Re alpha)`` with
    ``gamma_21 = gamma_trd + gamma_inh``.  If ``effective`` (an
    :class:`~eitprop.calibration.EffectiveParams`) is given, the control is
    scaled by ``beta`` and ``gamma_inh`` is taken from it instead of the
    medium.
    """
    omega_c = _cw_control(drive)
    gamma_21 = medium.gamma_trd + medium.gamma_inh
    if effective is not None:
        omega_c = effective.beta * omega_c
        gamma_21 = medium.gamma_trd + effective.gamma_inh
    a = _alpha(delta_p, omega_c, drive.delta_c_plus, scheme, gamma_21)
    return np.exp(-0.5 * medium.od * np.real(a))


def _radial_velocity_average(delta_p, medium, omega_c0, delta_c, scheme, quad,
                             radial_nodes, velocity_nodes):
    delta_p = np.atleast_1d(np.asarray(delta_p, float))
    r_eff = 1.0 / np.sqrt(1.0 / medium.sigma_a ** 2 + 1.0 / medium.sigma_pc ** 2)
    rmax = quad.rmax_factor * r_eff
    x, wx = leggauss(radial_nodes)
    r = 0.5 * rmax * (x + 1.0)
    wr = 0.5 * rmax * wx
    hv, hw = hermgauss(velocity_nodes)
    wv = hw / np.sqrt(np.pi)
    kv = medium.k_thermal * hv
    # density x probe-mode weight, normalized: pins the sigma_a -> 0 limit to
    # the homogeneous on-axis result
    wgt = wr * r * np.exp(-(r / medium.sigma_a) ** 2) * np.exp(-(r / medium.sigma_pc) ** 2)
    wgt = wgt / wgt.sum()
    oc_r = omega_c0 * np.exp(-(r / medium.sigma_pc) ** 2)
    a = _alpha(delta_p[:, None, None], oc_r[None, :, None], delta_c, scheme,
               medium.gamma_trd, doppler_kv=kv[None, None, :])
    return np.einsum("drv,r,v->d", np.real(a), wgt, wv)


def transmission_inhomogeneous(delta_p, medium: MediumConfig, drive: DriveConfig,
                               scheme: LevelScheme, quad: QuadratureSpec | None = None):
    """Transmission of the radially inhomogeneous, thermally averaged medium.

    The absorption coefficient is evaluated with the local control
    ``Omega_c(r)`` (Stark shift included per radius) and per velocity class,
    then averaged with the density/probe-mode radial weight and the
    Maxwell-Boltzmann velocity weight.  Decoherence enters as ``gamma_trd``
    only; inhomogeneous broadening emerges from the average itself.

    Emits :class:`QuadratureWarning` when doubling both node counts moves
    the result by more than ``quad.convergence_tol``.
    """
    quad = quad or QuadratureSpec()
    omega_c0 = _cw_control(drive)
    scalar = np.ndim(delta_p) == 0
    abar = _radial_velocity_average(delta_p, medium, omega_c0, drive.delta_c_plus,
                                    scheme, quad, quad.radial_nodes, quad.velocity_nodes)
    t = np.exp(-0.5 * medium.od * abar)
    if quad.check_convergence:
        abar2 = _radial_velocity_average(delta_p, medium, omega_c0, drive.delta_c_plus,
                                         scheme, quad, 2 * quad.radial_nodes,
                                         2 * quad.velocity_nodes)
        t2 = np.exp(-0.5 * medium.od * abar2)
        worst = float(np.max(np.abs(t - t2)))
        if worst > quad.convergence_tol:
            warnings.warn(
                f"quadrature not converged: doubling nodes changes T by {worst:.2e}",
                QuadratureWarning, stacklevel=2)
    return float(t[0]) if scalar else t


def spectrum(delta_grid, medium: MediumConfig, drive: DriveConfig,
             scheme: LevelScheme, inhomogeneous=True,
             quad: QuadratureSpec | None = None, effective=None):
    """Transmission over a detuning grid via the selected path."""
    delta_grid = np.asarray(delta_grid, float)
    if inhomogeneous:
        return transmission_inhomogeneous(delta_grid, medium, drive, scheme, quad)
    return transmission_homogeneous(delta_grid, medium, drive, scheme, effective)


def write_spectrum_csv(path, delta_grid, transmission):
    """Write a spectrum as CSV: header row, comma separator, LF endings."""
    with open(path, "w", newline="\n") as f:
        f.write("# format_version=1\n")
        f.write("delta_p_over_gamma,transmission\n")
        for d, t in zip(np.asarray(delta_grid), np.asarray(transmission)):
            f.write(f"{d:.9g},{t:.9g}\n")
