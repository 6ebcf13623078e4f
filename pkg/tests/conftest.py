"""Acceptance bookkeeping: one pass/fail line per numbered criterion in the terminal summary."""

import pytest

CRITERIA = {
    1: "IMLS value on a dense plane equals the signed distance (< 1e-6 m, < 5 s)",
    2: "kernel weight at 0.20 m with h = 0.06 m is <= 0.0002",
    3: "3-plane room, noise 0.02 m: 100 perturbations recovered within 5 mm / 0.05 deg (< 60 s)",
    4: "200 m synthetic loop, 80 sweeps: endpoint error < 1.0 m with the default config",
    5: "ablation directions over 3 seeds: removal on <= off, ours <= random, n=1 > n=5 > n=100",
    6: "self-match sampling returns exactly 9s = 900 samples",
    7: "k-NN / radius match brute force exactly; IMLS matches direct summation to 1e-12",
    8: "KITTI sequence 04: translation drift <= 1.5 %, <= 2 s per scan (needs IMLS_KITTI_ROOT)",
}

_outcomes: dict[int, list] = {}
_measured: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test backs numbered acceptance criterion n")


@pytest.fixture
def measured(request):
    """Record a measured value next to the criterion's summary line."""
    marker = request.node.get_closest_marker("criterion")

    def note(text):
        _measured.setdefault(marker.args[0], []).append(text)

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(marker.args[0], []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, text in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        elif "failed" in results:
            status = "FAIL"
        elif all(r == "skipped" for r in results):
            status = "SKIP"
        else:
            status = "PASS"
        detail = "; ".join(_measured.get(n, []))
        tr.write_line(f"criterion {n}: {status:7s} {text}" + (f"  [{detail}]" if detail else ""))
