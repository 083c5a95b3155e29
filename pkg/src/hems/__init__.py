"""Online energy management for a smart home with HVAC, EV, battery storage and PV."""

from .config import HomeConfig, compute_psi, load_config, validate_config
from .controller import Policy, SimulationRun, SlotRecord, make_policy, run_simulation
from .errors import (
    AssumptionViolated,
    BoundsError,
    EmptyRun,
    HemsError,
    InfeasibleInitialState,
    InfeasibleParameters,
    MissingColumn,
    NumericalFailure,
    ParseError,
    RangeError,
    TraceLengthMismatch,
    ValidationError,
    WindowTooShort,
)
from .metrics import RunSummary, atd, energy_cost, summarize
from .params import ControllerParams, DerivedBounds, derive_controller_params
from .physics import EvRequest, SlotObservation, SystemState
from .solver import Decision, P2Instance, solve_p2
from .traces import TraceBundle, bundled_trace, load_trace_csv, synthesize_trace

__version__ = "0.1.0"
