"""Simulation and control library for a full-range direct power flow controller.

Subpackages by concern: `phasor` (three-phase steady-state arithmetic),
`region` (reachable compensation-vector geometry), `converter` (averaged
modulation chain), `control` (parameter selection and closed-loop
regulation), `simulate` (switching-level PWM validation), `gridline`
(two-bus power flow), `scenario`/`cli` (config-driven front end).
"""

from .backend import HAS_NUMBA, active_backend
from .control import (
    AnalyticPlant,
    ClosedLoopResult,
    ControlGains,
    LoopState,
    Measurement,
    ReferenceSetpoint,
    default_initial_params,
    loop_step,
    reference_from_target,
    run_closed_loop,
    select_params,
    solve_params_general,
    target_from_reference,
)
from .converter import (
    DutyWaveform,
    GridSource,
    RegulatedGrid,
    averaged_phase_output,
    compensation_voltages,
    duty_cycles,
    fundamental_components,
    regulated_grid,
)
from .gridline import FlowResult, LineModel, SweepRow, flow_sweep, power_flow
from .phasor import (
    Phasor,
    ThreePhaseSet,
    TransformerSpec,
    add,
    angle_distance_deg,
    line_from_phase,
    normalize_deg,
    phase_from_line,
    reflect_through_transformer,
)
from .region import (
    CompensationTarget,
    ControlParams,
    PhaseInterval,
    RegionError,
    forward_target,
    is_feasible,
    magnitude_envelope,
    phase_envelope,
    region_boundary,
    rhombus_contains,
    total_region_contains,
)
from .scenario import Scenario, ScenarioError, default_scenario, parse_scenario
from .simulate import (
    CircuitParams,
    SimConfig,
    SwitchingPlant,
    WaveformRecord,
    simulate,
    spectrum_at,
    switch_function,
)

__version__ = "0.1.0"
