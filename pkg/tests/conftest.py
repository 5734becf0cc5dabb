"""Collects outcomes of tests marked ``criterion(n, title)`` and prints one line per criterion."""
from collections import defaultdict

import pytest

_OUTCOMES = defaultdict(list)
_TITLES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_itemcollected(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        _TITLES[mark.args[0]] = mark.args[1] if len(mark.args) > 1 else ""


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args[0]


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "xfail" if hasattr(report, "wasxfail") and report.skipped else report.outcome
        _OUTCOMES[crit].append((report.nodeid.split("::")[-1], status))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_OUTCOMES):
        results = _OUTCOMES[crit]
        failed = [n for n, s in results if s == "failed"]
        xfailed = [n for n, s in results if s == "xfail"]
        passed = sum(s == "passed" for _, s in results)
        if failed:
            verdict = "FAIL"
        elif xfailed:
            verdict = "FAIL (known, xfail)"
        else:
            verdict = "PASS"
        line = f"criterion {crit} [{_TITLES.get(crit, '')}]: {verdict}; {passed} checks passed"
        if xfailed:
            line += f"; xfail: {', '.join(xfailed)}"
        if failed:
            line += f"; failed: {', '.join(failed)}"
        tr.write_line(line)
