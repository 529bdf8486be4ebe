"""Magnetically navigated capsules in channel flow: a desk-scale simulator.

Modules
-------
geometry : channel shapes as signed distance fields
    build_tube, build_y_junction, signed_distance, entrance_positions
flowfield : analytic duct velocity profiles and gridded fields
    FluidProperties, FlowField, make_flow, load_vfield, save_vfield
magnetics : magnetization curves, field commands, gradient forces
    MagnetizationCurve, default_capsule_curve, uniform_command, magnetic_force
dynamics : capsule equation of motion and trajectory integration
    CapsuleSpec, simulate_trajectory, relaxation_time, reflect_collision
kernels : compiled scalar integrator behind the fast trajectory path
sweep : factorial navigation studies over velocity and gradient
    FactorialDesign, run_factorial, export_matrix_csv
locomotion : surface rolling speed and counterflow pull limits
    RollingModel, rolling_velocity, max_counterflow
hyperthermia : heating power extraction and capsule dissolution
    slp_from_curve, DissolutionModel, simulate_dissolution
session : stepped live simulation sessions over a line protocol
config : flat key=value run configuration
cli : command line entry points (installed as "capnav")
errors : exception types shared by all modules
"""

from .dynamics import (
    CapsuleSpec,
    CapsuleState,
    StepControl,
    TrajectoryLimits,
    relaxation_time,
    simulate_trajectory,
)
from .errors import (
    CapnavError,
    ConfigError,
    FileFormatError,
    InvalidParameterError,
    NumericalFailureError,
    OutOfDomainError,
)
from .flowfield import FluidProperties, FlowField, make_flow
from .geometry import Geometry, build_tube, build_y_junction, entrance_positions
from .hyperthermia import DissolutionModel, simulate_dissolution, slp_from_curve
from .locomotion import RollingModel, max_counterflow, rolling_velocity
from .magnetics import (
    CapabilityEnvelope,
    MagnetizationCurve,
    default_capsule_curve,
    magnetic_force,
    uniform_command,
)

__version__ = "0.1.0"

__all__ = [
    "CapnavError",
    "CapabilityEnvelope",
    "CapsuleSpec",
    "CapsuleState",
    "ConfigError",
    "DissolutionModel",
    "FileFormatError",
    "FlowField",
    "FluidProperties",
    "Geometry",
    "InvalidParameterError",
    "MagnetizationCurve",
    "NumericalFailureError",
    "OutOfDomainError",
    "RollingModel",
    "StepControl",
    "TrajectoryLimits",
    "build_tube",
    "build_y_junction",
    "default_capsule_curve",
    "entrance_positions",
    "magnetic_force",
    "make_flow",
    "max_counterflow",
    "relaxation_time",
    "rolling_velocity",
    "simulate_dissolution",
    "simulate_trajectory",
    "slp_from_curve",
    "uniform_command",
]
