"""rectsim: finite-time sliding-mode control of a three-phase AC-DC rectifier.

Averaged dq-frame plant, a disturbance-adaptive terminal sliding-mode
voltage/current cascade, three comparison controllers, a deterministic
fixed-step engine, and a verification suite for the finite-time bounds.
"""

from .plant import (PlantParams, PlantState, LoadProfile, GridProfile,
                    plant_derivative, abc_to_dq, dq_to_abc, load_disturbance)
from .voltctl import (VoltageGains, VoltageLoopState, fpow, voltage_surface,
                      sliding_phase_time, voltage_control, reaching_time_bound)
from .estimator import (EstimatorState, EsoState, derivative_filter_step,
                        filter_error_bound, rho_tilde_estimate, adapt_rho_step,
                        eso_step)
from .currctl import (CurrentGains, CurrentLoopState, current_refs, psi_term,
                      current_surface, terminal_time, sat_vec, current_control,
                      current_reaching_bound)
from .baselines import BaselineGains, pi_pr_step, sta_step, itsmc_step
from .simcore import (Scenario, RunLog, Metrics, ScenarioError,
                      SimulationAbort, rk4_step, integrate_step, run_scenario,
                      compute_metrics, verify_bounds, write_timeseries_csv,
                      metrics_payload, LOG_COLUMNS)
from .scenarios import load_scenario, list_bundled

__version__ = "0.1.0"
