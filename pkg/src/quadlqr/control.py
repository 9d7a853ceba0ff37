"""Runtime attitude controller: error state, integral action and allocation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .quat import Quaternion
from .synthesis import GainMatrix, Mode
from .vehicle import RigidBodyState, VehicleParams

DEFAULT_INTEGRAL_LIMIT = 0.2  # rad·s per axis
DEFAULT_CONTROL_DT = 0.0025


@dataclass(frozen=True)
class AttitudeCommand:
    target_attitude: Quaternion = quat.IDENTITY
    target_body_rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    feedforward_thrust: float = 0.0

    def __post_init__(self):
        q = self.target_attitude
        if not isinstance(q, Quaternion):
            q = Quaternion.from_array(q)
        if abs(quat.norm(q) - 1.0) > 1e-9:
            raise ValueError(f"target attitude must be unit-norm, got |q| = {quat.norm(q)}")
        object.__setattr__(self, "target_attitude", q)
        object.__setattr__(self, "target_body_rates",
                           np.asarray(self.target_body_rates, dtype=float).reshape(3))


@dataclass
class ControllerState:
    gain: GainMatrix
    integral_z: np.ndarray = field(default_factory=lambda: np.zeros(3))
    integral_limit: np.ndarray = field(
        default_factory=lambda: np.full(3, DEFAULT_INTEGRAL_LIMIT))

    def __post_init__(self):
        self.integral_z = np.asarray(self.integral_z, dtype=float).reshape(3)
        self.integral_limit = np.broadcast_to(
            np.asarray(self.integral_limit, dtype=float), (3,)).copy()
        if np.any(self.integral_limit < 0):
            raise ValueError("integral_limit must be non-negative")
        if self.mode is Mode.LQR and np.any(self.integral_z != 0):
            raise ValueError("LQR controller cannot carry integral state")

    @property
    def mode(self) -> Mode:
        return self.gain.mode


def attitude_error_state(current: RigidBodyState, cmd: AttitudeCommand) -> np.ndarray:
    """Feedback error ``[angle-axis error; rate error]`` in the body frame.

    The attitude part is the rotation carrying the target attitude onto the
    current one, ``q_target* ⊗ q_current``, expressed in body axes so it
    lines up with the body torques it drives.
    """
    q_err = quat.canonicalize(
        quat.multiply(quat.conjugate(cmd.target_attitude), current.attitude))
    e_att = quat.to_angle_axis(q_err)
    return np.concatenate([e_att, current.body_rates - cmd.target_body_rates])


def control_step(
    state: ControllerState,
    current: RigidBodyState,
    cmd: AttitudeCommand,
    dt: float,
    error_noise=None,
) -> tuple[np.ndarray, ControllerState]:
    """One controller update; returns the torque demand and the new state.

    ``error_noise`` (6-vector) is added to the measured error before it is
    used, standing in for estimator noise.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = attitude_error_state(current, cmd)
    if error_noise is not None:
        e = e + np.asarray(error_noise, dtype=float)
    K = state.gain.K
    if state.mode is Mode.LQR:
        return -(K @ e), state
    z = np.clip(state.integral_z + e[:3] * dt, -state.integral_limit, state.integral_limit)
    tau = -(K @ np.concatenate([z, e]))
    return tau, dataclasses.replace(state, integral_z=z)


def allocate(tau_ref, thrust_ref: float, params: VehicleParams) -> tuple[np.ndarray, bool]:
    """Rotor speeds realizing ``(thrust_ref, tau_ref)``.

    When the wrench is infeasible the thrust is kept and the torque vector is
    shrunk uniformly until every squared speed fits in
    ``[0, rotor_speed_max²]``. If the thrust alone is out of range it is
    clipped and no torque is applied.
    """
    if thrust_ref < 0:
        raise ValueError("thrust_ref must be non-negative")
    tau_ref = np.asarray(tau_ref, dtype=float)
    Minv = params.mixing_inverse
    upper = params.rotor_speed_max ** 2
    thrust = min(thrust_ref, 4.0 * params.k_thrust * upper)
    base = Minv[:, 0] * thrust
    delta = Minv[:, 1:] @ tau_ref

    scale = 1.0
    for b, d in zip(base, delta):
        if d > 0.0 and b + d > upper:
            scale = min(scale, (upper - b) / d)
        elif d < 0.0 and b + d < 0.0:
            scale = min(scale, -b / d)
    scale = max(scale, 0.0)
    saturated = thrust != thrust_ref or scale < 1.0
    omega_sq = np.clip(base + scale * delta, 0.0, upper)
    return np.sqrt(omega_sq), saturated


def hover_command(params: VehicleParams, attitude: Quaternion = quat.IDENTITY) -> AttitudeCommand:
    return AttitudeCommand(attitude, np.zeros(3), params.hover_thrust)

