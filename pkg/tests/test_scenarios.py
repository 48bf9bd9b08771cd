"""Protocol runners: metrics, windows, reductions and warnings."""
import math

import numpy as np
import pytest

from eitprop.atoms import DriveConfig, default_rb87_d2, microseconds
from eitprop.scenarios import (BandwidthWarning, CoherenceExcitationWarning,
                               GeometryWarning, ProbePulseSpec,
                               build_slp_drive, eit_window_width,
                               phase_matching_detuning, run_slow_light,
                               run_slp, run_storage)
from eitprop.solver import SimulationGrid
from eitprop.spectra import MediumConfig

SCHEME = default_rb87_d2()
COLD = dict(theta=0.0, k_thermal=0.0)


class TestFormulas:
    def test_window_width_direct(self):
        assert eit_window_width(16.0, 2.0, SCHEME) == pytest.approx(1.0)

    def test_window_width_slp_preset(self):
        oc_eff = math.sqrt(2.6 ** 2 + 3.8 ** 2)
        assert eit_window_width(53.0, oc_eff, SCHEME) == pytest.approx(2.9, abs=0.02)

    def test_window_width_large_od_limit(self):
        assert eit_window_width(1e12, 2.0, SCHEME) < 1e-5
        with pytest.raises(ValueError):
            eit_window_width(0.0, 2.0, SCHEME)

    def test_phase_matching_detuning(self):
        assert phase_matching_detuning(1.0, SCHEME) == pytest.approx(
            -SCHEME.delta_omega_21)
        assert phase_matching_detuning(0.0, SCHEME) == 0.0
        assert phase_matching_detuning(1e-4, SCHEME) == pytest.approx(
            -0.1126, abs=2e-4)
        with pytest.raises(ValueError):
            phase_matching_detuning(1.5, SCHEME)


class TestSlowLight:
    def test_vacuum_delay_is_zero(self):
        med = MediumConfig(od=0.0, phi_pm=0.0, **COLD)
        r = run_slow_light(0.0, 3.8, ProbePulseSpec(fwhm=5.0), med, SCHEME,
                           dt=0.01)
        assert abs(r.delay) <= 0.01
        assert r.efficiency == pytest.approx(1.0, abs=1e-6)

    def test_delay_against_formula_single_point(self):
        med = MediumConfig(od=50.0, gamma_trd=1e-4, phi_pm=0.0, **COLD)
        r = run_slow_light(50.0, 3.8, ProbePulseSpec(fwhm=6.0), med, SCHEME)
        assert r.delay == pytest.approx(50.0 / 3.8 ** 2, rel=0.10)

    def test_bandwidth_warning(self):
        med = MediumConfig(od=200.0, gamma_trd=1e-3, phi_pm=0.0, **COLD)
        with pytest.warns(BandwidthWarning):
            run_slow_light(200.0, 1.5, ProbePulseSpec(fwhm=3.0), med, SCHEME,
                           dt=0.01)


class TestStorage:
    def test_lossless_ideal_storage_independent_of_time(self):
        # no decoherence, ideal three-level medium: efficiency does not
        # depend on the storage duration
        med = MediumConfig(od=120.0, gamma_trd=0.0, gamma_inh=0.0,
                           phi_pm=0.0, **COLD)
        scheme = SCHEME.reduced()
        etas = []
        for dtau in (5.0, 25.0):
            r = run_storage(dtau, 120.0, 3.5, ProbePulseSpec(fwhm=10.0),
                            med, scheme)
            etas.append(r.efficiency)
        assert abs(etas[0] - etas[1]) < 1e-4

    def test_windows_partition_output(self):
        med = MediumConfig(od=60.0, gamma_trd=0.005, gamma_inh=0.01,
                           phi_pm=0.0, **COLD)
        r = run_storage(10.0, 60.0, 3.0, ProbePulseSpec(fwhm=6.5), med, SCHEME)
        total = r.output_energy_forward + r.output_energy_backward
        parts = sum(w.energy for w in r.windows.values())
        assert parts == pytest.approx(total, abs=1e-9 * max(total, 1e-30))
        assert r.flags["retrieval_only_after_reactivation"]
        assert 0.0 <= r.efficiency <= 1.0

    def test_geometry_warning_when_pulse_does_not_fit(self):
        med = MediumConfig(od=20.0, gamma_trd=0.005, phi_pm=0.0, **COLD)
        with pytest.warns(GeometryWarning):
            run_storage(5.0, 20.0, 3.5, ProbePulseSpec(fwhm=10.0), med, SCHEME,
                        dt=0.01)

    def test_deterministic(self):
        med = MediumConfig(od=40.0, gamma_trd=0.005, phi_pm=0.0, **COLD)
        a = run_storage(8.0, 40.0, 3.0, ProbePulseSpec(fwhm=5.0), med, SCHEME)
        b = run_storage(8.0, 40.0, 3.0, ProbePulseSpec(fwhm=5.0), med, SCHEME)
        assert a.efficiency == b.efficiency
        assert np.array_equal(a.record.probe_out_forward,
                              b.record.probe_out_forward)


class TestSlp:
    def test_no_backward_control_reduces_to_slow_light(self):
        med = MediumConfig(od=40.0, gamma_trd=0.004, gamma_inh=0.0,
                           phi_pm=14.3245, **COLD)
        pulse = ProbePulseSpec(fwhm=7.0)
        t_end = 70.0
        grid = SimulationGrid(t_end=t_end, nz=129, dt=0.004, n_max=3)
        slow = run_slow_light(40.0, 2.8, pulse, med, SCHEME, grid=grid,
                              delta_c=1.0, delta_p=0.45, vacuum_reference=False)
        drive = build_slp_drive(2.8, 0.0, 1.0, -2.5, 0.45, pulse,
                                tau_d=40.0 / 2.8 ** 2)
        slp = run_slp(drive, 40.0, pulse, med, SCHEME, grid=grid, t_end=t_end)
        scale = slow.record.probe_out_forward.max()
        assert np.max(np.abs(slow.record.probe_out_forward
                             - slp.record.probe_out_forward)) < 1e-6 * scale
        assert slp.efficiency == pytest.approx(slow.efficiency, abs=1e-9)

    def test_zeta_inside_window_warns(self):
        med = MediumConfig(od=53.0, gamma_trd=0.006, phi_pm=0.0, **COLD)
        pulse = ProbePulseSpec(fwhm=6.0)
        drive = build_slp_drive(2.6, 3.8, 1.0, 1.2, 0.45, pulse, tau_d=7.8,
                                dual_time=4.0)
        with pytest.warns(CoherenceExcitationWarning):
            run_slp(drive, 53.0, pulse, med, SCHEME, nz=64, dt=0.01, n_max=1,
                    t_end=30.0)

    def test_windows_partition_and_flags(self):
        med = MediumConfig(od=53.0, gamma_trd=0.006, gamma_inh=0.012,
                           phi_pm=14.3245, **COLD)
        pulse = ProbePulseSpec(fwhm=9.0)
        beta = 0.9044
        drive = build_slp_drive(2.6, 3.8, 1.0, -2.5, 0.45, pulse,
                                tau_d=53.0 / (beta * 2.6) ** 2, beta=beta)
        r = run_slp(drive, 53.0, pulse, med, SCHEME)
        total = r.output_energy_forward + r.output_energy_backward
        parts = sum(w.energy for w in r.windows.values())
        assert parts == pytest.approx(total, abs=1e-9 * total)
        assert set(r.windows) == {"early", "leakage", "retrieval"}
        assert r.record.truncation_ratio > 3.0
        d = r.to_dict()
        assert isinstance(d["windows"]["retrieval"]["energy"], float)


def test_scenario_result_serializable():
    import json
    med = MediumConfig(od=5.0, gamma_trd=0.005, phi_pm=0.0, **COLD)
    r = run_slow_light(5.0, 2.0, ProbePulseSpec(fwhm=4.0), med, SCHEME,
                       dt=0.01, nz=48)
    json.dumps(r.to_dict())
