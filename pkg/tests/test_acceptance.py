"""Acceptance suite. Each criterion is tagged with ``acceptance(number, title)``
and the run ends with one PASS/FAIL line per criterion."""

import math
import time

import numpy as np
import pytest

from quadlqr import metrics, quat
from quadlqr.config import load
from quadlqr.control import ControllerState, hover_command
from quadlqr.metrics import TrackingMetrics, improvement
from quadlqr.sim import Scenario, run, run_comparison
from quadlqr.synthesis import (
    REFERENCE_Q_LQR,
    REFERENCE_R,
    CostWeights,
    Mode,
    is_controllable,
    linearize_hover,
    riccati_residual,
    solve_care,
    synthesize_lqr,
    synthesize_lqri,
)
from quadlqr.vehicle import (
    VehicleParams,
    WrenchB,
    dynamics_reduced,
    mix_forward,
    mix_inverse,
)

from test_sim import rk4_error

# reference gain table: attitude 0.387 and rate 0.08 on every axis
REFERENCE_K_LQR = (0.387, 0.08)


def closed_form(inertia, q_att=0.135, q_rate=0.0005):
    b = 1.0 / inertia
    p2 = math.sqrt(q_att) / b
    return b * p2, b * math.sqrt(2 * p2 + q_rate) / b


def certify(A, B, Q, R):
    P, K = solve_care(A, B, Q, R)
    res = np.linalg.norm(riccati_residual(A, B, Q, R, P))
    assert res < 1e-8 * (1 + np.linalg.norm(P))
    np.testing.assert_allclose(P, P.T, atol=1e-12 * (1 + np.linalg.norm(P)))
    assert np.linalg.eigvalsh(0.5 * (P + P.T)).min() > 0
    assert np.linalg.eigvals(A - B @ K).real.max() < 0


# criterion 1 -------------------------------------------------------------

GAIN_TITLE = "gain reproduction vs closed form (1e-6) and reference gain table (+-15%)"


@pytest.mark.acceptance(1, GAIN_TITLE)
def test_c1_gains_match_closed_form():
    t0 = time.perf_counter()
    params = VehicleParams()
    K = synthesize_lqr(params, CostWeights.diagonal(REFERENCE_Q_LQR, REFERENCE_R)).K
    assert time.perf_counter() - t0 < 1.0
    for axis, inertia in enumerate((0.01, 0.02, 0.01)):
        k_att, k_rate = closed_form(inertia)
        assert abs(K[axis, axis] - k_att) < 1e-6
        assert abs(K[axis, axis + 3] - k_rate) < 1e-6
    assert K[0, 0] == pytest.approx(0.36742, abs=5e-6)
    assert K[1, 4] == pytest.approx(0.12328, abs=5e-6)


@pytest.mark.acceptance(1, GAIN_TITLE)
def test_c1_gains_within_band_of_reference_table():
    params = VehicleParams()
    K = synthesize_lqr(params, CostWeights.diagonal(REFERENCE_Q_LQR, REFERENCE_R)).K
    off = []
    for axis in range(3):
        for col, ref in zip((axis, axis + 3), REFERENCE_K_LQR):
            dev = (K[axis, col] - ref) / ref
            if abs(dev) > 0.15:
                off.append(f"K[{axis},{col}] = {K[axis, col]:.5f} vs {ref} ({100 * dev:+.1f}%)")
    assert not off, "; ".join(off)


# criterion 2 -------------------------------------------------------------

@pytest.mark.acceptance(2, "Riccati certification on reference and 100 random systems")
def test_c2_riccati_certification():
    t0 = time.perf_counter()
    params = VehicleParams()
    ss = linearize_hover(params)
    certify(ss.A, ss.B, np.diag(REFERENCE_Q_LQR), np.diag(REFERENCE_R))
    lqri = synthesize_lqri(params, CostWeights.diagonal((0.001, 0.002, 0.001) + REFERENCE_Q_LQR,
                                                        REFERENCE_R))
    certify(lqri.A, lqri.B, np.diag((0.001, 0.002, 0.001) + REFERENCE_Q_LQR), np.eye(3))

    rng = np.random.default_rng(2024)
    done = 0
    while done < 100:
        n = int(rng.integers(1, 10))
        m = int(rng.integers(1, n + 1))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, m))
        if not is_controllable(A, B):
            continue
        M = rng.normal(size=(n, n))
        Q = M @ M.T + 1e-2 * np.eye(n)
        N = rng.normal(size=(m, m))
        R = N @ N.T + 0.1 * np.eye(m)
        certify(A, B, Q, R)
        done += 1
    assert time.perf_counter() - t0 < 10.0


# criterion 3 -------------------------------------------------------------

@pytest.mark.acceptance(3, "finite-difference Jacobian matches hover linearization")
def test_c3_linearization():
    params = VehicleParams()
    ss = linearize_hover(params)
    h = 1e-6
    x0, u0 = np.zeros(6), np.zeros(3)

    def f(x, u):
        return dynamics_reduced(x[:3], x[3:], u, params)

    A = np.column_stack([(f(x0 + h * e, u0) - f(x0 - h * e, u0)) / (2 * h) for e in np.eye(6)])
    B = np.column_stack([(f(x0, u0 + h * e) - f(x0, u0 - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.abs(A - ss.A).max() < 1e-6
    assert np.abs(B - ss.B).max() < 1e-6


# criterion 4 -------------------------------------------------------------

@pytest.mark.acceptance(4, "constant disturbance: LQR offset matches oracle, LQRi < 0.1 deg")
def test_c4_steady_state_rejection():
    t0 = time.perf_counter()
    cfg = load("disturbance_step.cfg")
    lqr = synthesize_lqr(cfg.params, cfg.weights(Mode.LQR))
    lqri = synthesize_lqri(cfg.params, cfg.weights(Mode.LQRI))
    t_lqr, t_lqri = run_comparison(cfg.scenario, lqr, lqri, cfg.params,
                                   integral_limit=cfg.integral_limit)
    elapsed = time.perf_counter() - t0

    assert cfg.scenario.duration == 20.0
    np.testing.assert_allclose(cfg.scenario.disturbance, [0.02, 0, 0])
    np.testing.assert_allclose(t_lqr.commanded_euler_deg[-1], [10, 0, 0], atol=1e-9)

    err_lqr = metrics.wrap_deg(t_lqr.euler_deg[-1, 0] - 10.0)
    err_lqri = metrics.wrap_deg(t_lqri.euler_deg[-1, 0] - 10.0)
    oracle = math.degrees(0.02 / lqr.K[0, 0])
    assert abs(err_lqr) > 0.5
    assert abs(err_lqr - oracle) / oracle < 0.20
    assert abs(err_lqri) < 0.1
    assert elapsed < 5.0


# criterion 5 -------------------------------------------------------------

@pytest.mark.acceptance(5, "step sequence with disturbances: LQRi RMSE >= 20% better roll/pitch")
def test_c5_comparative_improvement():
    cfg = load("step_sequence.cfg")
    assert np.any(cfg.scenario.disturbance != 0)
    lqr = synthesize_lqr(cfg.params, cfg.weights(Mode.LQR))
    lqri = synthesize_lqri(cfg.params, cfg.weights(Mode.LQRI))
    t_lqr, t_lqri = run_comparison(cfg.scenario, lqr, lqri, cfg.params,
                                   integral_limit=cfg.integral_limit)
    pct = improvement(metrics.compute(t_lqr), metrics.compute(t_lqri))["rmse"]
    assert pct[0] >= 20.0
    assert pct[1] >= 20.0


# criterion 6 -------------------------------------------------------------

@pytest.mark.acceptance(6, "improvement arithmetic on reference RMSE pairs (19.2%, 54.7%)")
def test_c6_improvement_arithmetic():
    def roll_only(v):
        r = np.array([v, 1.0, 1.0])
        return TrackingMetrics(r ** 2, r, r)

    first = improvement(roll_only(1.027), roll_only(0.83))["rmse"][0]
    second = improvement(roll_only(4.085), roll_only(1.85))["rmse"][0]
    assert abs(first - 19.2) <= 0.5
    assert abs(second - 54.7) <= 0.5


# criterion 7 -------------------------------------------------------------

def _rodrigues(v):
    theta = np.linalg.norm(v)
    if theta == 0:
        return np.eye(3)
    k = v / theta
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(theta) * Kx + (1 - math.cos(theta)) * Kx @ Kx


@pytest.mark.acceptance(7, "quaternion algebra over 1000 random cases")
def test_c7_quaternion_suite():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a, b, c = (quat.normalize(quat.Quaternion(*rng.normal(size=4))) for _ in range(3))
        raw = quat.Quaternion(*rng.normal(scale=3.0, size=4))
        v = rng.normal(scale=5.0, size=3)

        left = quat.multiply(quat.multiply(a, b), c)
        right = quat.multiply(a, quat.multiply(b, c))
        assert np.abs(left.as_array() - right.as_array()).max() < 1e-12
        assert quat.conjugate(quat.conjugate(raw)) == raw

        aa = quat.to_angle_axis(a)
        scale = 1 + np.linalg.norm(v)
        assert np.abs(quat.rotate_vector(a, v) - _rodrigues(aa) @ v).max() < 1e-10 * scale

        theta = rng.uniform(1e-6, math.pi - 1e-6)
        axis = rng.normal(size=3)
        w = theta * axis / np.linalg.norm(axis)
        assert np.abs(quat.to_angle_axis(quat.from_angle_axis(w)) - w).max() < 1e-9


# criterion 8 -------------------------------------------------------------

SIM_TITLE = "simulator: hover equilibrium, RK4 order, bit-exact determinism"


@pytest.mark.acceptance(8, SIM_TITLE)
def test_c8_equilibrium():
    params = VehicleParams()
    gain = synthesize_lqr(params, CostWeights.diagonal(REFERENCE_Q_LQR, REFERENCE_R))
    trace = run(Scenario(10.0, [(0.0, hover_command(params))]), ControllerState(gain), params)
    assert np.abs(np.radians(trace.euler_deg)).max() < 1e-6


@pytest.mark.acceptance(8, SIM_TITLE)
def test_c8_rk4_order():
    params = VehicleParams()
    order = math.log2(rk4_error(params, 0.01) / rk4_error(params, 0.005))
    assert 3.5 <= order <= 4.5


@pytest.mark.acceptance(8, SIM_TITLE)
def test_c8_determinism():
    cfg = load("step_sequence.cfg")
    cfg.scenario.duration = 2.0
    gain = synthesize_lqri(cfg.params, cfg.weights(Mode.LQRI))
    a = run(cfg.scenario, ControllerState(gain), cfg.params)
    b = run(cfg.scenario, ControllerState(gain), cfg.params)
    assert a.data.tobytes() == b.data.tobytes()
    assert a.to_csv() == b.to_csv()


# criterion 9 -------------------------------------------------------------

ALLOC_TITLE = "allocation round trip within 1e-9 and saturation flags"


@pytest.mark.acceptance(9, ALLOC_TITLE)
def test_c9_round_trip():
    params = VehicleParams()
    rng = np.random.default_rng(9)
    for _ in range(1000):
        s = rng.uniform(0.0, params.rotor_speed_max, 4)
        speeds, saturated = mix_inverse(mix_forward(s, params), params)
        assert not saturated
        assert np.abs(speeds - s).max() < 1e-9 * params.rotor_speed_max


@pytest.mark.acceptance(9, ALLOC_TITLE)
def test_c9_saturation_flags():
    params = VehicleParams()
    T = params.hover_thrust
    infeasible = [
        WrenchB(T, [50.0, 0, 0]),
        WrenchB(T, [0, -50.0, 0]),
        WrenchB(T, [0, 0, 5.0]),
        WrenchB(10 * 4 * params.k_thrust * params.rotor_speed_max ** 2, [0, 0, 0]),
        WrenchB(0.0, [0.1, 0, 0]),
    ]
    for w in infeasible:
        speeds, saturated = mix_inverse(w, params)
        assert saturated, w
        assert np.all(speeds >= 0) and np.all(speeds <= params.rotor_speed_max)
    _, saturated = mix_inverse(WrenchB(T, [0.05, -0.05, 0.001]), params)
    assert not saturated
