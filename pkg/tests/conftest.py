import hypothesis
import numpy as np
import pytest

from rfchain.device import Polarity
from rfchain.presets import reference_chain
from rfchain.programming import calibration_sweep, extract_table

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

np.seterr(over="raise", invalid="raise")

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and summary")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "_criterion", None)
    if crit is not None:
        n, text = crit
        prev = _criteria.get(n, (text, "PASS"))
        ok = report.outcome == "passed" and prev[1] == "PASS"
        _criteria[n] = (text, "PASS" if ok else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        text, status = _criteria[n]
        terminalreporter.write_line(f"[{status}] criterion {n}: {text}")


@pytest.fixture(scope="session")
def chain():
    return reference_chain()


@pytest.fixture(scope="session")
def sweeps(chain):
    rng = np.random.default_rng(11)
    return calibration_sweep(chain, rng), calibration_sweep(chain, rng, start=Polarity.UP)


@pytest.fixture(scope="session")
def calibrated(chain, sweeps):
    return extract_table(*sweeps, n_devices=len(chain))
