"""Command-line entry point: ``quadlqr synth|sim|compare CONFIG``.

Exit codes: 0 success, 1 config error, 2 synthesis error, 3 simulation
divergence.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__, metrics
from .config import ConfigError, RunConfig, load
from .control import ControllerState
from .sim import SimTrace, SimulationDivergence, run, run_comparison
from .synthesis import GainMatrix, Mode, SynthesisError, synthesize_lqr, synthesize_lqri

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SYNTHESIS = 2
EXIT_DIVERGENCE = 3


def provenance(cfg: RunConfig, command: str, mode: str) -> list[str]:
    name = cfg.source.name if cfg.source else "<memory>"
    return [
        f"quadlqr {__version__}",
        f"command={command} mode={mode}",
        f"config={name} sha256={cfg.sha256}",
        f"seed={cfg.scenario.seed}",
    ]


def synthesize(cfg: RunConfig, mode: Mode) -> GainMatrix:
    weights = cfg.weights(mode)
    if mode is Mode.LQRI:
        return synthesize_lqri(cfg.params, weights)
    return synthesize_lqr(cfg.params, weights)


def _matrix(M: np.ndarray) -> list[str]:
    return ["  " + "  ".join(f"{v: .9g}" for v in row) for row in np.atleast_2d(M)]


def gain_report(gain: GainMatrix, header: list[str]) -> str:
    lines = [f"# {h}" for h in header]
    n = gain.K.shape[1]
    lines.append(f"mode: {gain.mode.value}")
    lines.append(f"K ({gain.K.shape[0]}x{n}):")
    lines += _matrix(gain.K)
    lines.append(f"P ({n}x{n}):")
    lines += _matrix(gain.P)
    lines.append("closed-loop eigenvalues:")
    for ev in sorted(gain.closed_loop_eigenvalues, key=lambda z: (z.real, z.imag)):
        lines.append(f"  {ev.real: .9g} {ev.imag:+.9g}j")
    lines.append(f"riccati residual (Frobenius): {gain.residual:.3e}")
    return "\n".join(lines) + "\n"


def kv_report(values: dict[str, float], header: list[str]) -> str:
    lines = [f"# {h}" for h in header]
    for key, value in values.items():
        lines.append(f"{key} = {'undefined' if np.isnan(value) else format(value, '.9g')}")
    return "\n".join(lines) + "\n"


def long_format_csv(traces: dict[str, SimTrace], header: list[str]) -> str:
    buf = io.StringIO()
    for h in header:
        buf.write(f"# {h}\n")
    buf.write("t_s,series,value\n")
    first = next(iter(traces.values()))
    series = [("cmd.roll_deg", first, 1), ("cmd.pitch_deg", first, 2), ("cmd.yaw_deg", first, 3)]
    for name, tr in traces.items():
        series += [(f"{name}.roll_deg", tr, 4), (f"{name}.pitch_deg", tr, 5),
                   (f"{name}.yaw_deg", tr, 6)]
    for label, tr, col in series:
        for t, v in zip(tr.t, tr.data[:, col]):
            buf.write(f"{t:.9g},{label},{v:.9g}\n")
    return buf.getvalue()


def _write(path: Path, text: str):
    path.write_text(text)
    print(f"wrote {path}")


def cmd_synth(cfg: RunConfig, mode: Mode, out: Path) -> int:
    gain = synthesize(cfg, mode)
    report = gain_report(gain, provenance(cfg, "synth", mode.value))
    print(report, end="")
    out.mkdir(parents=True, exist_ok=True)
    _write(out / f"gains_{mode.value}.txt", report)
    return EXIT_OK


def _metric_outputs(cfg, out: Path, stem: str, text: str, values: dict, header):
    fmt = cfg.output.report_format
    if fmt in ("text", "both"):
        _write(out / f"{stem}.txt", "".join(f"# {h}\n" for h in header) + text + "\n")
    if fmt in ("kv", "both"):
        _write(out / f"{stem}.kv", kv_report(values, header))


def cmd_sim(cfg: RunConfig, mode: Mode, out: Path) -> int:
    gain = synthesize(cfg, mode)
    header = provenance(cfg, "sim", mode.value)
    controller = ControllerState(gain, integral_limit=cfg.integral_limit)
    try:
        trace = run(cfg.scenario, controller, cfg.params)
    except SimulationDivergence as exc:
        out.mkdir(parents=True, exist_ok=True)
        exc.trace.to_csv(out / f"trace_{mode.value}.csv.partial", header)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    m = metrics.compute(trace)
    table = metrics.format_table(m, f"{mode.value.upper()} tracking errors (deg)")
    print(table)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.output.csv:
        trace.to_csv(out / f"trace_{mode.value}.csv", header)
        print(f"wrote {out / f'trace_{mode.value}.csv'}")
    _metric_outputs(cfg, out, f"metrics_{mode.value}", table, m.as_dict(), header)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out: Path) -> int:
    lqr = synthesize(cfg, Mode.LQR)
    lqri = synthesize(cfg, Mode.LQRI)
    header = provenance(cfg, "compare", "lqr+lqri")
    try:
        t_lqr, t_lqri = run_comparison(cfg.scenario, lqr, lqri, cfg.params,
                                       integral_limit=cfg.integral_limit)
    except SimulationDivergence as exc:
        out.mkdir(parents=True, exist_ok=True)
        exc.trace.to_csv(out / "trace_compare.csv.partial", header)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    m_lqr, m_lqri = metrics.compute(t_lqr), metrics.compute(t_lqri)
    pct = metrics.improvement(m_lqr, m_lqri)
    text = "\n\n".join([
        metrics.format_table(m_lqr, "LQR tracking errors (deg)"),
        metrics.format_table(m_lqri, "LQRi tracking errors (deg)"),
        metrics.format_improvement(pct),
    ])
    print(text)
    values = {f"lqr.{k}": v for k, v in m_lqr.as_dict().items()}
    values.update({f"lqri.{k}": v for k, v in m_lqri.as_dict().items()})
    for name, arr in pct.items():
        for axis, v in zip(metrics.AXES, arr):
            values[f"improvement_pct.{axis}.{name}"] = float(v)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.output.csv:
        for name, tr in (("lqr", t_lqr), ("lqri", t_lqri)):
            tr.to_csv(out / f"trace_{name}.csv", header)
            print(f"wrote {out / f'trace_{name}.csv'}")
    _metric_outputs(cfg, out, "comparison", text, values, header)
    _write(out / "comparison_long.csv",
           long_format_csv({"lqr": t_lqr, "lqri": t_lqri}, header))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadlqr",
        description="LQR / LQRi quadcopter attitude control synthesis and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synth", "synthesize gains and print K, P, eigenvalues and residual"),
        ("sim", "simulate one controller and report tracking metrics"),
        ("compare", "simulate LQR and LQRi on the same scenario and compare"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="config file path or bundled config name")
        p.add_argument("--mode", choices=[m.value for m in Mode],
                       help="controller mode (overrides [weights] mode)")
        p.add_argument("--seed", type=int, help="noise seed (overrides [scenario] seed)")
        p.add_argument("--out", type=Path, help="output directory (overrides [output] directory)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed must be non-negative, got {args.seed}")
            cfg.scenario.seed = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    mode = Mode(args.mode) if args.mode else cfg.mode
    out = args.out if args.out is not None else cfg.output.directory
    try:
        if args.command == "synth":
            return cmd_synth(cfg, mode, out)
        if args.command == "sim":
            return cmd_sim(cfg, mode, out)
        return cmd_compare(cfg, out)
    except SynthesisError as exc:
        print(f"synthesis error: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS


if __name__ == "__main__":
    sys.exit(main())
