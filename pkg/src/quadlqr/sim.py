"""Fixed-step closed-loop simulation of the nonlinear quadcopter.

The plant is integrated with classical RK4 at ``physics_dt`` while the
controller runs every ``control_dt`` and its rotor speeds are held
zero-order in between. Measurement noise and torque noise are drawn from
numpy's PCG64 generator seeded per run, nine normals per control step in a
fixed order (6 error-noise samples, then 3 torque-noise samples), so two
runs with the same seed see the same noise regardless of controller.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import quat
from .control import AttitudeCommand, ControllerState, allocate, control_step
from .synthesis import GainMatrix
from .vehicle import RigidBodyState, VehicleParams, make_derivative, mix_forward

COLUMNS = (
    "t_s",
    "cmd_roll_deg", "cmd_pitch_deg", "cmd_yaw_deg",
    "roll_deg", "pitch_deg", "yaw_deg",
    "p_rad_s", "q_rad_s", "r_rad_s",
    "tau_x_nm", "tau_y_nm", "tau_z_nm",
    "omega1_rad_s", "omega2_rad_s", "omega3_rad_s", "omega4_rad_s",
    "saturated",
    "z_x", "z_y", "z_z",
)

DEFAULT_SEED = 20240101
DIVERGENCE_RATE = 1e3  # rad/s


class SimulationDivergence(Exception):
    """Raised when the state blows up; ``trace`` holds the rows produced so far."""

    def __init__(self, message: str, trace: SimTrace):
        super().__init__(message)
        self.trace = trace


@dataclass
class Scenario:
    duration: float
    commands: Sequence[tuple[float, AttitudeCommand]]
    physics_dt: float = 0.0005
    control_dt: float = 0.0025
    initial_state: RigidBodyState = field(default_factory=RigidBodyState)
    disturbance: np.ndarray = field(default_factory=lambda: np.zeros(3))
    disturbance_noise_std: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude_noise_std: float = 0.0
    rate_noise_std: float = 0.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        self.disturbance = np.asarray(self.disturbance, dtype=float).reshape(3)
        self.disturbance_noise_std = np.broadcast_to(
            np.asarray(self.disturbance_noise_std, dtype=float), (3,)).copy()
        self.commands = [(float(t), c) for t, c in self.commands]
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 0 < self.physics_dt <= self.control_dt:
            raise ValueError("need 0 < physics_dt <= control_dt")
        ratio = self.control_dt / self.physics_dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError("control_dt must be an integer multiple of physics_dt")
        steps = self.duration / self.control_dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError("duration must be an integer multiple of control_dt")
        if not self.commands or self.commands[0][0] != 0.0:
            raise ValueError("command profile must start at t = 0")
        times = [t for t, _ in self.commands]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("command times must be strictly increasing")
        if self.attitude_noise_std < 0 or self.rate_noise_std < 0:
            raise ValueError("noise standard deviations must be non-negative")
        if np.any(self.disturbance_noise_std < 0):
            raise ValueError("noise standard deviations must be non-negative")

    @property
    def n_steps(self) -> int:
        return round(self.duration / self.control_dt)

    @property
    def substeps(self) -> int:
        return round(self.control_dt / self.physics_dt)


@dataclass
class SimTrace:
    data: np.ndarray
    columns: tuple[str, ...] = COLUMNS
    partial: bool = False

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.column("t_s")

    @property
    def commanded_euler_deg(self) -> np.ndarray:
        return self.data[:, 1:4]

    @property
    def euler_deg(self) -> np.ndarray:
        return self.data[:, 4:7]

    @property
    def integral(self) -> np.ndarray:
        return self.data[:, 18:21]

    def __len__(self) -> int:
        return self.data.shape[0]

    def to_csv(self, dest=None, header_lines: Sequence[str] = ()) -> str | None:
        """Write the trace as CSV with 9 significant digits.

        ``header_lines`` are emitted first as ``#``-prefixed comments. When
        ``dest`` is None the CSV text is returned.
        """
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.data:
            buf.write(",".join(f"{v:.9g}" for v in row) + "\n")
        text = buf.getvalue()
        if dest is None:
            return text
        with open(dest, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path) -> SimTrace:
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        columns = tuple(lines[0].strip().split(","))
        data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
        return cls(data, columns)


def rk4_step(f, x, h, *args):
    k1 = f(x, *args)
    k2 = f([a + 0.5 * h * b for a, b in zip(x, k1)], *args)
    k3 = f([a + 0.5 * h * b for a, b in zip(x, k2)], *args)
    k4 = f([a + h * b for a, b in zip(x, k3)], *args)
    h6 = h / 6.0
    return [a + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]


def _renormalize(x):
    qw, qx, qy, qz = x[6:10]
    n = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    x[6:10] = [qw / n, qx / n, qy / n, qz / n]


def run(scenario: Scenario, controller: ControllerState, params: VehicleParams) -> SimTrace:
    """Simulate the closed loop and return the control-rate trace.

    Raises
    ------
    SimulationDivergence
        If any state component becomes non-finite or the body rates exceed
        ``DIVERGENCE_RATE``; the exception carries the partial trace.
    """
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    f = make_derivative(params)
    h = scenario.physics_dt
    dt = scenario.control_dt
    n_steps, substeps = scenario.n_steps, scenario.substeps
    noise_scale = np.array([scenario.attitude_noise_std] * 3 + [scenario.rate_noise_std] * 3)
    commands = scenario.commands
    cmd_idx = 0

    x = scenario.initial_state.to_vector().tolist()
    _renormalize(x)
    ctrl = controller
    rows = np.empty((n_steps + 1, len(COLUMNS)))

    for k in range(n_steps + 1):
        t = k * dt
        while cmd_idx + 1 < len(commands) and commands[cmd_idx + 1][0] <= t + 1e-9 * dt:
            cmd_idx += 1
        cmd = commands[cmd_idx][1]
        state = RigidBodyState.from_vector(x)
        noise = rng.standard_normal(9)
        tau, ctrl = control_step(ctrl, state, cmd, dt, noise[:6] * noise_scale)
        speeds, saturated = allocate(tau, cmd.feedforward_thrust, params)

        rows[k, 0] = t
        rows[k, 1:4] = np.degrees(quat.to_euler(cmd.target_attitude))
        rows[k, 4:7] = np.degrees(quat.to_euler(state.attitude))
        rows[k, 7:10] = state.body_rates
        rows[k, 10:13] = tau
        rows[k, 13:17] = speeds
        rows[k, 17] = float(saturated)
        rows[k, 18:21] = ctrl.integral_z
        if k == n_steps:
            break

        wrench = mix_forward(speeds, params)
        torque = (wrench.torque + scenario.disturbance
                  + noise[6:] * scenario.disturbance_noise_std).tolist()
        thrust = wrench.thrust
        for _ in range(substeps):
            x = rk4_step(f, x, h, thrust, torque)
            _renormalize(x)
        if not all(math.isfinite(v) for v in x) or math.hypot(*x[10:13]) > DIVERGENCE_RATE:
            raise SimulationDivergence(
                f"simulation diverged at t = {t + dt:.4f} s",
                SimTrace(rows[:k + 1].copy(), partial=True),
            )
    return SimTrace(rows)


def run_comparison(
    scenario: Scenario,
    lqr: GainMatrix,
    lqri: GainMatrix,
    params: VehicleParams,
    integral_limit=None,
) -> tuple[SimTrace, SimTrace]:
    """Run the same scenario (and noise realization) under both gains."""
    kwargs = {} if integral_limit is None else {"integral_limit": integral_limit}
    first = run(scenario, ControllerState(lqr, **kwargs), params)
    second = run(scenario, ControllerState(lqri, **kwargs), params)
    return first, second
