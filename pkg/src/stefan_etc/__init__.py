"""Event-triggered safe boundary control of a one-phase melting plant.

Library surface: the plant model and solver, barrier evaluation, the
event-triggered controller with its dwell-time analysis, backstepping and
Lyapunov diagnostics, and the scenario harness behind the CLI.
"""

from ._accel import active_backend_name
from .cbf import CbfSnapshot, SafeSetReport, h1_ode_residual, safe_set_check, snapshot
from .config import ScenarioConfig, from_mapping, load, loads, with_overrides
from .controller import (ControllerGains, EtcController, EtcState, Event,
                         EventLog, closed_form_check, etc_update,
                         h23_closed_form, interval_margin_check, m_functions,
                         min_dwell_time, nominal_control, trigger_fired,
                         zeno_audit)
from .diagnostics import (BacksteppingParams, DecayReport, LyapunovConstants,
                          decay_report, default_epsilon, forward_transform,
                          inverse_transform, lyapunov_V, lyapunov_Vbar,
                          lyapunov_Vh, norm_Phi)
from .errors import (ConfigError, EmptyTraceError, NonFiniteState,
                     NonMonotoneTime, SolverError, StabilityViolation)
from .harness import (RunSummary, Trace, audit_run, load_run,
                      run_baseline_continuous, run_scenario, simulate, sweep)
from .model import (AssumptionViolation, InitialCondition, MATERIAL_PRESETS,
                    PlantParams, Setpoint, StefanState, energy_balance_defect,
                    initial_state, linear_profile, sigma, validate_config)
from .solver import SolverSettings, interface_velocity, run, stable_dt, step

__version__ = "0.1.0"
