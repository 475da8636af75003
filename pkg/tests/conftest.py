"""Shared fixtures and the per-criterion acceptance summary."""

import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    state = _CRITERIA.setdefault(number, {"title": title, "outcome": "PASS", "ran": False})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        state["ran"] = True
        if report.skipped:
            if state["outcome"] == "PASS":
                state["outcome"] = "SKIP"
        elif report.failed:
            state["outcome"] = "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        state = _CRITERIA[number]
        if state["ran"]:
            terminalreporter.write_line(f"criterion {number:2d}: {state['outcome']:4s}  "
                                        f"{state['title']}")
