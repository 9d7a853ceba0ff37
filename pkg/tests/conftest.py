import numpy as np
import pytest

from quadlqr.synthesis import REFERENCE_Q_LQR, REFERENCE_Q_LQRI, REFERENCE_R, CostWeights
from quadlqr.synthesis import synthesize_lqr, synthesize_lqri
from quadlqr.vehicle import VehicleParams

# integral weights of the bundled disturbance scenarios (100x the reference)
STRONG_Q_LQRI = (0.1, 0.2, 0.1) + REFERENCE_Q_LQR


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def lqr_gain(params):
    return synthesize_lqr(params, CostWeights.diagonal(REFERENCE_Q_LQR, REFERENCE_R))


@pytest.fixture(scope="session")
def lqri_gain(params):
    return synthesize_lqri(params, CostWeights.diagonal(REFERENCE_Q_LQRI, REFERENCE_R))


@pytest.fixture(scope="session")
def strong_lqri_gain(params):
    return synthesize_lqri(params, CostWeights.diagonal(STRONG_Q_LQRI, REFERENCE_R))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "seen": False})
    if report.when == "call" or report.failed:
        entry["seen"] = True
        if report.failed:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if not entry["seen"]:
            status = "SKIP"
        else:
            status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")
