"""Collects one pass/fail line per acceptance criterion and prints them at the end of the run."""
import pytest

_criteria = {}
_outcomes = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criteria[item.nodeid] = mark.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.when == "call" or report.failed or report.skipped:
        if report.nodeid not in _outcomes or report.failed:
            details = ", ".join(f"{k}={v}" for k, v in report.user_properties)
            _outcomes[report.nodeid] = (report.outcome, details)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (number, title) in sorted(_criteria.items(), key=lambda kv: kv[1][0]):
        if nodeid not in _outcomes:
            continue
        outcome, details = _outcomes[nodeid]
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"criterion {number:>2} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{details}]" if details else ""))
