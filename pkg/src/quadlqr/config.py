"""Run configuration files.

Configs are INI files with the sections ``[vehicle]``, ``[weights]``,
``[controller]``, ``[scenario]`` and ``[output]``; every section and key is
optional and falls back to the reference design. Vectors are written as
comma- or space-separated numbers. The command profile is a multi-line
value, one ``time roll pitch yaw`` row per line (seconds, degrees)::

    [scenario]
    commands =
        0.0   0  0  0
        2.0  10  0  0

Errors raised while loading are :class:`ConfigError` and name the file,
line, section and key at fault.
"""

from __future__ import annotations

import configparser
import hashlib
import importlib.resources
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import quat
from .control import DEFAULT_INTEGRAL_LIMIT, AttitudeCommand
from .sim import DEFAULT_SEED, Scenario
from .synthesis import REFERENCE_Q_LQR, REFERENCE_Q_LQRI, REFERENCE_R, CostWeights, Mode, SynthesisError
from .vehicle import RigidBodyState, VehicleParams

SCHEMA = {
    "vehicle": {"mass", "inertia", "arm_length", "k_thrust", "k_torque",
                "rotor_speed_max", "gravity"},
    "weights": {"mode", "q_lqr", "q_lqri", "r"},
    "controller": {"integral_limit"},
    "scenario": {"duration", "physics_dt", "control_dt", "initial_attitude_deg",
                 "initial_body_rates", "thrust", "commands", "disturbance",
                 "disturbance_noise_std", "attitude_noise_std", "rate_noise_std", "seed"},
    "output": {"directory", "csv", "report_format"},
}
REPORT_FORMATS = ("text", "kv", "both")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class OutputConfig:
    directory: Path = Path("out")
    csv: bool = True
    report_format: str = "both"


@dataclass
class RunConfig:
    params: VehicleParams
    mode: Mode
    q_lqr: tuple[float, ...]
    q_lqri: tuple[float, ...]
    r: tuple[float, ...]
    integral_limit: np.ndarray
    scenario: Scenario
    output: OutputConfig = field(default_factory=OutputConfig)
    source: Path | None = None
    sha256: str = ""

    def weights(self, mode: Mode | None = None) -> CostWeights:
        mode = self.mode if mode is None else mode
        q = self.q_lqri if mode is Mode.LQRI else self.q_lqr
        return CostWeights.diagonal(q, self.r)


def bundled_configs() -> list[str]:
    root = importlib.resources.files("quadlqr") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_path(path) -> Path:
    """Return ``path`` if it exists, else the bundled config of that name."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in bundled_configs():
        with importlib.resources.as_file(
                importlib.resources.files("quadlqr") / "configs" / p.name) as res:
            return Path(res)
    raise ConfigError(f"{path}: no such config file (bundled: {', '.join(bundled_configs())})")


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, None), lineno)
            continue
        m = re.match(r"([^\s=:#;][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), lineno)
    return index


class _Reader:
    def __init__(self, path: Path, text: str):
        self.path = path
        self.index = _line_index(text)
        self.cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            self.cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def error(self, section: str, key: str | None, msg: str) -> ConfigError:
        line = self.index.get((section, key)) or self.index.get((section, None))
        where = f"{self.path}:{line}" if line else str(self.path)
        what = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {what}: {msg}")

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def raw(self, section, key):
        return self.cp.get(section, key)

    def floats(self, section, key, default, sizes=None):
        if not self.has(section, key):
            return default
        text = self.raw(section, key)
        try:
            values = tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)
        except ValueError:
            raise self.error(section, key, f"expected numbers, got {text!r}") from None
        if sizes is not None and len(values) not in sizes:
            want = " or ".join(str(s) for s in sizes)
            raise self.error(section, key, f"expected {want} values, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise self.error(section, key, "values must be finite")
        return values

    def scalar(self, section, key, default, positive=False, nonneg=False):
        if not self.has(section, key):
            return default
        (value,) = self.floats(section, key, None, sizes=(1,))
        if positive and value <= 0:
            raise self.error(section, key, f"must be positive, got {value}")
        if nonneg and value < 0:
            raise self.error(section, key, f"must be non-negative, got {value}")
        return value


def load(path) -> RunConfig:
    path = resolve_path(path)
    data = Path(path).read_bytes()
    text = data.decode("utf-8")
    rd = _Reader(Path(path), text)

    for section in rd.cp.sections():
        if section not in SCHEMA:
            raise rd.error(section, None, "unknown section")
        for key in rd.cp.options(section):
            if key not in SCHEMA[section]:
                raise rd.error(section, key, "unknown key")

    params = _vehicle(rd)
    mode, q_lqr, q_lqri, r = _weights(rd)
    limit = rd.floats("controller", "integral_limit", (DEFAULT_INTEGRAL_LIMIT,), sizes=(1, 3))
    if any(v < 0 for v in limit):
        raise rd.error("controller", "integral_limit", "must be non-negative")
    scenario = _scenario(rd, params)
    output = _output(rd)
    return RunConfig(
        params=params, mode=mode, q_lqr=q_lqr, q_lqri=q_lqri, r=r,
        integral_limit=np.broadcast_to(np.array(limit), (3,)).copy(),
        scenario=scenario, output=output, source=Path(path),
        sha256=hashlib.sha256(data).hexdigest(),
    )


def _vehicle(rd: _Reader) -> VehicleParams:
    d = VehicleParams()
    s = "vehicle"
    kwargs = {}
    for key in ("mass", "arm_length", "k_thrust", "k_torque", "rotor_speed_max"):
        kwargs[key] = rd.scalar(s, key, getattr(d, key), positive=True)
    inertia = rd.floats(s, "inertia", None, sizes=(3, 9))
    if inertia is None:
        J = d.inertia
    elif len(inertia) == 3:
        J = np.diag(inertia)
    else:
        J = np.array(inertia).reshape(3, 3)
    gravity = rd.floats(s, "gravity", tuple(d.gravity), sizes=(3,))
    try:
        return VehicleParams(inertia=J, gravity=np.array(gravity), **kwargs)
    except ValueError as exc:
        key = "inertia" if "inertia" in str(exc) else None
        raise rd.error(s, key, str(exc)) from None


def _weights(rd: _Reader):
    s = "weights"
    mode_text = rd.raw(s, "mode").strip().lower() if rd.has(s, "mode") else Mode.LQR.value
    try:
        mode = Mode(mode_text)
    except ValueError:
        raise rd.error(s, "mode", f"must be 'lqr' or 'lqri', got {mode_text!r}") from None
    q_lqr = rd.floats(s, "q_lqr", REFERENCE_Q_LQR, sizes=(6,))
    q_lqri = rd.floats(s, "q_lqri", REFERENCE_Q_LQRI, sizes=(9,))
    r = rd.floats(s, "r", REFERENCE_R, sizes=(3,))
    for key, q in (("q_lqr", q_lqr), ("q_lqri", q_lqri)):
        if any(v < 0 for v in q):
            raise rd.error(s, key, "state weights must be non-negative (Q positive semidefinite)")
    if any(v <= 0 for v in r):
        raise rd.error(s, "r", "input weights must be positive (R positive definite)")
    try:
        CostWeights.diagonal(q_lqr, r)
        CostWeights.diagonal(q_lqri, r)
    except SynthesisError as exc:
        raise rd.error(s, None, str(exc)) from None
    return mode, q_lqr, q_lqri, r


def _commands(rd: _Reader, thrust: float) -> list[tuple[float, AttitudeCommand]]:
    s, key = "scenario", "commands"
    if not rd.has(s, key):
        return [(0.0, AttitudeCommand(quat.IDENTITY, np.zeros(3), thrust))]
    rows = []
    for line in rd.raw(s, key).strip().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            values = [float(v) for v in re.split(r"[,\s]+", line) if v]
        except ValueError:
            raise rd.error(s, key, f"bad command row {line!r}") from None
        if len(values) != 4:
            raise rd.error(s, key, f"command rows need 'time roll pitch yaw', got {line!r}")
        t, roll, pitch, yaw = values
        q = quat.from_euler(*np.radians([roll, pitch, yaw]))
        rows.append((t, AttitudeCommand(q, np.zeros(3), thrust)))
    if not rows:
        raise rd.error(s, key, "command profile is empty")
    return rows


def _scenario(rd: _Reader, params: VehicleParams) -> Scenario:
    s = "scenario"
    if rd.has(s, "thrust") and rd.raw(s, "thrust").strip().lower() == "hover":
        thrust = params.hover_thrust
    else:
        thrust = rd.scalar(s, "thrust", params.hover_thrust, nonneg=True)
    att = rd.floats(s, "initial_attitude_deg", (0.0, 0.0, 0.0), sizes=(3,))
    rates = rd.floats(s, "initial_body_rates", (0.0, 0.0, 0.0), sizes=(3,))
    seed = rd.scalar(s, "seed", DEFAULT_SEED, nonneg=True)
    if seed != int(seed):
        raise rd.error(s, "seed", "must be an integer")
    kwargs = dict(
        duration=rd.scalar(s, "duration", 10.0, positive=True),
        commands=_commands(rd, thrust),
        physics_dt=rd.scalar(s, "physics_dt", 0.0005, positive=True),
        control_dt=rd.scalar(s, "control_dt", 0.0025, positive=True),
        initial_state=RigidBodyState(
            attitude=quat.from_euler(*np.radians(att)), body_rates=np.array(rates)),
        disturbance=np.array(rd.floats(s, "disturbance", (0.0, 0.0, 0.0), sizes=(3,))),
        disturbance_noise_std=np.array(
            rd.floats(s, "disturbance_noise_std", (0.0,), sizes=(1, 3))),
        attitude_noise_std=rd.scalar(s, "attitude_noise_std", 0.0, nonneg=True),
        rate_noise_std=rd.scalar(s, "rate_noise_std", 0.0, nonneg=True),
        seed=int(seed),
    )
    if any(v < 0 for v in kwargs["disturbance_noise_std"]):
        raise rd.error(s, "disturbance_noise_std", "must be non-negative")
    try:
        return Scenario(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("physics_dt", "control_dt", "duration", "commands")
                    if k in msg or (k == "commands" and "command" in msg)), None)
        raise rd.error(s, key, msg) from None


def _output(rd: _Reader) -> OutputConfig:
    s = "output"
    directory = Path(rd.raw(s, "directory").strip()) if rd.has(s, "directory") else Path("out")
    csv = True
    if rd.has(s, "csv"):
        try:
            csv = rd.cp.getboolean(s, "csv")
        except ValueError:
            raise rd.error(s, "csv", "must be a boolean (yes/no)") from None
    fmt = rd.raw(s, "report_format").strip().lower() if rd.has(s, "report_format") else "both"
    if fmt not in REPORT_FORMATS:
        raise rd.error(s, "report_format", f"must be one of {', '.join(REPORT_FORMATS)}")
    return OutputConfig(directory, csv, fmt)
