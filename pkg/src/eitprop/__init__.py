"""EIT light propagation in a 1D cold-atom ensemble.

Analytic transmission spectra, effective-parameter calibration, and a
truncated Maxwell-Bloch solver for slow light, light storage/retrieval and
stationary light pulses.  All rates are in units of the excited-state
linewidth Gamma, times in 1/Gamma, lengths in units of the medium length.
"""

from .atoms import (DriveConfig, EliminationError, LevelScheme, MICROSECOND,
                    WeakProbeWarning, constant, default_rb87_d2, doppler_scale,
                    gaussian_pulse, microseconds, smooth_steps,
                    stark_compensated_control_detuning, stark_shift,
                    thermal_cloud_radius)
from .calibration import (CalibrationError, EffectiveParams, calibrate,
                          write_calibration_csv)
from .scenarios import (BandwidthWarning, CoherenceExcitationWarning,
                        GeometryWarning, ProbePulseSpec, ScenarioResult,
                        build_slp_drive, eit_window_width,
                        phase_matching_detuning, run_slow_light, run_slp,
                        run_storage)
from .solver import (BlochWorkspace, CoherenceState, FieldState,
                     SimulationGrid, SolverInstabilityError, TimeSeriesRecord,
                     TruncationWarning, bloch_step, cw_transmission,
                     field_sweep, propagate, truncation_ratio,
                     velocity_classes_for)
from .spectra import (ComplexAbsorption, MediumConfig, QuadratureSpec,
                      QuadratureWarning, absorption_coefficient, spectrum,
                      transmission_homogeneous, transmission_inhomogeneous,
                      write_spectrum_csv)

__version__ = "0.1.0"
