"""Deterministic 2D multicopter obstacle-avoidance simulation library.

A barrier-function guidance law steers first-order-lag vehicles to waypoints
while keeping a prescribed filtered-position separation from moving obstacles
(and, optionally, from each other).
"""

from .dynamics import (
    CONSTANT_VELOCITY,
    FilteredErrors,
    MulticopterState,
    Obstacle,
    PursuerBehavior,
    ScriptedBehavior,
    VehicleParams,
    approach_angle,
    compute_errors,
    filtered_position,
    step_multicopter,
    step_obstacle,
    velocity_margin_radius,
)
from .errors import (
    ApfGuardError,
    DegenerateGeometryError,
    InvalidArgumentError,
    InvalidConfigurationError,
    NotParallelError,
    ScenarioFormatError,
    SerializationError,
)
from .guidance import (
    GuidanceParams,
    bump_window,
    obstacle_potential,
    obstacle_potential_gradient,
    repulsive_gain,
    velocity_command,
    waypoint_potential,
)
from .mathcore import (
    Disc,
    Vec2,
    bump,
    bump_deriv,
    kappa,
    min_enclosing_disc,
    saturate,
    smooth_sat,
    smooth_sat_deriv,
)
from .multiobs import AssumptionReport, combine_parallel, select_active, validate
from .scenario_io import BUILTIN_NAMES, builtin, load, save
from .sim import (
    ArrivalMonitor,
    ScenarioConfig,
    SimMetrics,
    SimOptions,
    TraceRecord,
    VehicleSpec,
    arrival_check,
    deadlock_check,
    run,
    write_trace_csv,
)

__version__ = "0.1.0"
