"""LQR and integral-action LQR attitude control for quadcopters.

Gain synthesis from the hover-linearized attitude model, a nonlinear
Newton-Euler simulator with RK4 integration, and tracking-error reporting.
"""

__version__ = "0.1.0"

from .control import AttitudeCommand, ControllerState, allocate, attitude_error_state, control_step
from .metrics import TrackingMetrics, compute, improvement
from .quat import Quaternion
from .sim import Scenario, SimTrace, SimulationDivergence, run, run_comparison
from .synthesis import (
    CostWeights,
    GainMatrix,
    Mode,
    StateSpace,
    SynthesisError,
    augment_integral,
    linearize_hover,
    solve_care,
    synthesize_lqr,
    synthesize_lqri,
)
from .vehicle import RigidBodyState, VehicleParams, WrenchB, mix_forward, mix_inverse

__all__ = [
    "AttitudeCommand",
    "ControllerState",
    "CostWeights",
    "GainMatrix",
    "Mode",
    "Quaternion",
    "RigidBodyState",
    "Scenario",
    "SimTrace",
    "SimulationDivergence",
    "StateSpace",
    "SynthesisError",
    "TrackingMetrics",
    "VehicleParams",
    "WrenchB",
    "allocate",
    "attitude_error_state",
    "augment_integral",
    "compute",
    "control_step",
    "improvement",
    "linearize_hover",
    "mix_forward",
    "mix_inverse",
    "run",
    "run_comparison",
    "solve_care",
    "synthesize_lqr",
    "synthesize_lqri",
]
