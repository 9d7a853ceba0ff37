"""Attitude tracking statistics in degrees, per roll/pitch/yaw axis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

AXES = ("roll", "pitch", "yaw")
METRICS = ("mse", "rmse", "mean_deviation")


@dataclass(frozen=True)
class TrackingMetrics:
    mse: np.ndarray
    rmse: np.ndarray
    mean_deviation: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return {
            f"{axis}.{name}": float(getattr(self, name)[i])
            for i, axis in enumerate(AXES)
            for name in METRICS
        }


def wrap_deg(angle):
    """Wrap degrees into (-180, 180]."""
    a = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(a == -180.0, 180.0, a)


def from_errors(errors_deg) -> TrackingMetrics:
    """Metrics from an ``(N, 3)`` array of per-axis tracking errors in degrees."""
    e = np.atleast_2d(np.asarray(errors_deg, dtype=float))
    if e.shape[0] == 0:
        raise ValueError("cannot compute metrics of an empty trace")
    mse = np.mean(e * e, axis=0)
    return TrackingMetrics(mse=mse, rmse=np.sqrt(mse), mean_deviation=np.mean(np.abs(e), axis=0))


def compute(trace) -> TrackingMetrics:
    """Commanded-vs-actual Euler tracking metrics of a simulation trace."""
    if len(trace) == 0:
        raise ValueError("cannot compute metrics of an empty trace")
    errors = wrap_deg(trace.euler_deg - trace.commanded_euler_deg)
    return from_errors(errors)


def improvement(lqr: TrackingMetrics, lqri: TrackingMetrics) -> dict[str, np.ndarray]:
    """Relative improvement of ``lqri`` over ``lqr`` in percent.

    Positive means LQRi has the smaller error. Entries where the LQR metric is
    zero are NaN (undefined).
    """
    out = {}
    for name in METRICS:
        base = getattr(lqr, name)
        new = getattr(lqri, name)
        with np.errstate(divide="ignore", invalid="ignore"):
            pct = np.where(base != 0, 100.0 * (base - new) / base, np.nan)
        out[name] = pct
    return out


def _fmt(v: float, spec: str) -> str:
    return "undefined" if math.isnan(v) else format(v, spec)


def format_table(metrics: TrackingMetrics, title: str = "") -> str:
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Axis':<8}{'MSE':>14}{'RMSE':>14}{'Mean Deviation':>18}")
    for i, axis in enumerate(AXES):
        lines.append(
            f"{axis.capitalize():<8}{metrics.mse[i]:>14.6g}"
            f"{metrics.rmse[i]:>14.6g}{metrics.mean_deviation[i]:>18.6g}"
        )
    return "\n".join(lines)


def format_improvement(pct: dict[str, np.ndarray]) -> str:
    lines = ["Improvement of LQRi over LQR (%)",
             f"{'Axis':<8}{'MSE':>14}{'RMSE':>14}{'Mean Deviation':>18}"]
    for i, axis in enumerate(AXES):
        lines.append(
            f"{axis.capitalize():<8}{_fmt(pct['mse'][i], '>14.2f')}"
            f"{_fmt(pct['rmse'][i], '>14.2f')}{_fmt(pct['mean_deviation'][i], '>18.2f')}"
        )
    return "\n".join(lines)
