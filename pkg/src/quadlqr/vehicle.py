"""Quadcopter plant: parameters, motor mixing and Newton-Euler dynamics.

Rotor numbering follows the Quad-X convention 1 = front-right,
2 = back-left, 3 = front-left, 4 = back-right, with rotors 1, 2 spinning
opposite to 3, 4. Body torques are produced through the fixed sign matrix

    roll  = k_T·l·( Ω1² - Ω2² - Ω3² + Ω4²)
    pitch = k_T·l·( Ω1² - Ω2² + Ω3² - Ω4²)
    yaw   = k_tau·(  Ω1² + Ω2² - Ω3² - Ω4²)

The inertial frame has gravity along -z and thrust acts along +body-z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import quat
from .quat import Quaternion

STATE_SIZE = 13


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters of the quadcopter.

    The inertia default is the diagonal ``diag(0.01, 0.02, 0.01)`` used for
    the reference design; mass, arm length, rotor constants and speed limit
    describe an F450-class airframe with hover near 60% of the thrust range.
    """

    mass: float = 1.5
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.01, 0.02, 0.01]))
    arm_length: float = 0.225
    k_thrust: float = 1.0e-5
    k_torque: float = 1.7e-7
    rotor_speed_max: float = 1200.0
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        J = np.array(self.inertia, dtype=float)
        if J.shape == (3,):
            J = np.diag(J)
        g = np.array(self.gravity, dtype=float)
        object.__setattr__(self, "inertia", J)
        object.__setattr__(self, "gravity", g)
        J.setflags(write=False)
        g.setflags(write=False)

        for name in ("mass", "arm_length", "k_thrust", "k_torque", "rotor_speed_max"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if J.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got shape {J.shape}")
        if not np.allclose(J, J.T, rtol=0.0, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        if np.linalg.eigvalsh(J).min() <= 0:
            raise ValueError("inertia must be positive definite")
        if g.shape != (3,):
            raise ValueError(f"gravity must be a 3-vector, got shape {g.shape}")

    @cached_property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)

    @cached_property
    def mixing_inverse(self) -> np.ndarray:
        return np.linalg.inv(mixing_matrix(self))

    @property
    def hover_thrust(self) -> float:
        return self.mass * float(np.linalg.norm(self.gravity))

    @property
    def hover_speed(self) -> float:
        return float(np.sqrt(self.hover_thrust / (4.0 * self.k_thrust)))


@dataclass
class RigidBodyState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: Quaternion = quat.IDENTITY
    body_rates: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3)
        self.body_rates = np.asarray(self.body_rates, dtype=float).reshape(3)
        if not isinstance(self.attitude, Quaternion):
            self.attitude = Quaternion.from_array(self.attitude)

    def to_vector(self) -> np.ndarray:
        """Flatten to ``[r(3), v(3), q(4), ω(3)]``."""
        return np.concatenate([
            self.position, self.velocity, self.attitude.as_array(), self.body_rates,
        ])

    @classmethod
    def from_vector(cls, x) -> RigidBodyState:
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), Quaternion.from_array(x[6:10]), x[10:13].copy())


@dataclass(frozen=True)
class WrenchB:
    thrust: float
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))


def mixing_matrix(params: VehicleParams) -> np.ndarray:
    """4x4 map from squared rotor speeds to ``[F, τx, τy, τz]``."""
    kt, kq, arm = params.k_thrust, params.k_torque, params.arm_length
    return np.array([
        [kt, kt, kt, kt],
        [kt * arm, -kt * arm, -kt * arm, kt * arm],
        [kt * arm, -kt * arm, kt * arm, -kt * arm],
        [kq, kq, -kq, -kq],
    ])


def mix_forward(speeds, params: VehicleParams) -> WrenchB:
    omega_sq = np.square(np.asarray(speeds, dtype=float))
    w = mixing_matrix(params) @ omega_sq
    return WrenchB(float(w[0]), w[1:])


def mix_inverse(wrench: WrenchB, params: VehicleParams) -> tuple[np.ndarray, bool]:
    """Rotor speeds producing ``wrench``, with per-rotor clamping.

    Returns ``(speeds, saturated)``; ``saturated`` is True when any squared
    speed had to be clipped to ``[0, rotor_speed_max²]`` by more than
    round-off.
    """
    w = np.concatenate([[wrench.thrust], wrench.torque])
    omega_sq = params.mixing_inverse @ w
    upper = params.rotor_speed_max ** 2
    clipped = np.clip(omega_sq, 0.0, upper)
    saturated = bool(np.any(np.abs(clipped - omega_sq) > 1e-12 * upper))
    return np.sqrt(clipped), saturated


def dynamics_full(
    state: RigidBodyState,
    speeds,
    params: VehicleParams,
    disturbance_torque=(0.0, 0.0, 0.0),
) -> np.ndarray:
    """Time derivative of the 13-component rigid-body state.

    Returns ``[ṙ, v̇, q̇, ω̇]`` with ``q̇ = ½ q ⊗ (0, ω_B)`` (body rates) and the
    disturbance torque added to the rotor torque in Euler's equation.
    """
    wrench = mix_forward(speeds, params)
    torque = wrench.torque + np.asarray(disturbance_torque, dtype=float)
    f = make_derivative(params)
    return np.array(f(state.to_vector().tolist(), wrench.thrust, torque.tolist()))


def make_derivative(params: VehicleParams):
    """Build a scalar-math derivative ``f(x, thrust, torque) -> list``.

    ``x`` is the flat 13-list ``[r, v, q, ω]``; thrust and torque are held
    constant by the caller. This is the hot path of the simulator, so it
    avoids numpy on purpose.
    """
    inv_m = 1.0 / params.mass
    gx, gy, gz = (float(c) for c in params.gravity)
    (j00, j01, j02), (j10, j11, j12), (j20, j21, j22) = params.inertia.tolist()
    (i00, i01, i02), (i10, i11, i12), (i20, i21, i22) = params.inertia_inv.tolist()

    def derivative(x, thrust, torque):
        _, _, _, vx, vy, vz, qw, qx, qy, qz, p, q, r = x
        tx, ty, tz = torque
        # thrust along body z rotated to inertial: third column of R(q)
        a = thrust * inv_m
        ax = a * 2.0 * (qx * qz + qw * qy) + gx
        ay = a * 2.0 * (qy * qz - qw * qx) + gy
        az = a * (1.0 - 2.0 * (qx * qx + qy * qy)) + gz
        # q̇ = ½ q ⊗ (0, ω)
        dqw = 0.5 * (-qx * p - qy * q - qz * r)
        dqx = 0.5 * (qw * p + qy * r - qz * q)
        dqy = 0.5 * (qw * q - qx * r + qz * p)
        dqz = 0.5 * (qw * r + qx * q - qy * p)
        # ω̇ = J⁻¹ (τ − ω × Jω)
        hx = j00 * p + j01 * q + j02 * r
        hy = j10 * p + j11 * q + j12 * r
        hz = j20 * p + j21 * q + j22 * r
        mx = tx - (q * hz - r * hy)
        my = ty - (r * hx - p * hz)
        mz = tz - (p * hy - q * hx)
        return [
            vx, vy, vz,
            ax, ay, az,
            dqw, dqx, dqy, dqz,
            i00 * mx + i01 * my + i02 * mz,
            i10 * mx + i11 * my + i12 * mz,
            i20 * mx + i21 * my + i22 * mz,
        ]

    return derivative


def dynamics_reduced(attitude_error, omega_b, tau_b, params: VehicleParams) -> np.ndarray:
    """Reduced attitude dynamics ``[Q̇_a; ω̇_B] = [ω_B; J⁻¹(τ_B − ω_B × Jω_B)]``.

    ``attitude_error`` does not enter the right-hand side; it is accepted so
    the signature matches the 6-state model used for linearization.
    """
    omega = np.asarray(omega_b, dtype=float)
    tau = np.asarray(tau_b, dtype=float)
    J = params.inertia
    omega_dot = np.linalg.solve(J, tau - np.cross(omega, J @ omega))
    return np.concatenate([omega, omega_dot])
