"""Shared fixtures and the acceptance summary block.

The two shipped scenarios are expensive (2000 s of simulated time each), so
they run once per session and every test reads from the same artifacts.
"""

import os

import pytest

from fiberlink import run_scenario

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")


def scenario_path(name: str) -> str:
    return os.path.abspath(os.path.join(SCENARIO_DIR, name))


@pytest.fixture(scope="session")
def link108_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("link108")
    return run_scenario(scenario_path("link108.cfg"), str(out))


@pytest.fixture(scope="session")
def link86_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("link86")
    return run_scenario(scenario_path("link86.cfg"), str(out))


# ---------------------------------------------------------------------------
# One PASS/FAIL line per acceptance criterion at the end of the run.

_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "setup" and report.outcome != "passed":
        _results[name] = "failed"
    elif report.when == "call" and _results.get(name) != "failed":
        _results[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_results):
        parts = name.split("_", 3)
        number, label = parts[2], parts[3].replace("_", " ")
        word = "PASS" if _results[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({label}): {word}")
