from __future__ import annotations

from collections import defaultdict

import pytest

CRITERIA = {
    1: "closed-form optimal thresholds re-derived by root solve",
    2: "shrinker optimality vs golden-section oracle",
    3: "rank-aware loss, regret and improvement values",
    4: "signal-plus-noise phase transition (Monte Carlo)",
    5: "gamma -> 0 covariance eigenvalue and cosine maps (Monte Carlo)",
    6: "loss dominance of optimal rules (Monte Carlo)",
    7: "gamma -> infinity analog (Monte Carlo)",
    8: "property suites",
}

# wall-clock budget per criterion in seconds, summed over its tests
BUDGET = {1: 1.0, 2: 10.0, 4: 120.0, 5: 300.0, 6: 600.0, 7: 180.0, 8: 60.0}

_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)
_seconds: dict[int, float] = defaultdict(float)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = tuple(m.args[0] for m in item.iter_markers("criterion"))


def pytest_runtest_logreport(report):
    for n in getattr(report, "criteria", ()):
        if report.when in ("setup", "call"):
            _seconds[n] += report.duration
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for n in getattr(report, "criteria", ()):
        _outcomes[n].append((report.nodeid, report.outcome))


def _over_budget(n: int) -> bool:
    return n in BUDGET and _seconds[n] > BUDGET[n]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _outcomes.get(n)
        if not results:
            tr.write_line(f"criterion {n}: NOT RUN  {CRITERIA[n]}")
            continue
        failed = [nid for nid, oc in results if oc == "failed"]
        slow = _over_budget(n)
        status = "PASS" if not failed and not slow else "FAIL"
        timing = f"{_seconds[n]:.1f}s" + (f" of {BUDGET[n]:g}s budget" if n in BUDGET else "")
        tr.write_line(f"criterion {n}: {status}  {CRITERIA[n]} ({len(results) - len(failed)}/{len(results)} checks, {timing})")
        for nid in failed:
            tr.write_line(f"    failed: {nid}")
        if slow:
            tr.write_line("    failed: runtime budget exceeded")


def pytest_sessionfinish(session, exitstatus):
    if exitstatus == 0 and any(_over_budget(n) for n in _outcomes):
        session.exitstatus = 1
