from collections import defaultdict

import numpy as np
import pytest

from blockspec import make_explicit

CORPUS_SEED = 20240611
CORPUS_SIZE = 200

CRITERIA = {
    1: "spectrum union matches the assembled eigensolve",
    2: "resolvent max identity at probe points",
    3: "continuous / resolvent / point verdicts on diag_accumulating",
    4: "compactness verdicts",
    5: "merged singular values match the assembled SVD",
    6: "Schatten series bracket and rearrangement invariance",
    7: "power bounds and sup-sup interchange",
    8: "polynomial bounds and von Neumann brackets",
    9: "Volterra discretization norm and nilpotency",
    10: "minimal support is covering and inclusion-minimal",
}

_outcomes = defaultdict(list)


def random_blocks(rng, n_blocks, max_dim=6):
    out = []
    for _ in range(n_blocks):
        d = int(rng.integers(1, max_dim + 1))
        out.append(rng.random((d, d)) + 1j * rng.random((d, d)))
    return out


def make_corpus(seed=CORPUS_SEED, size=CORPUS_SIZE):
    rng = np.random.default_rng(seed)
    return [make_explicit(random_blocks(rng, int(rng.integers(2, 7)))) for _ in range(size)]


@pytest.fixture(scope="session")
def corpus():
    return make_corpus()


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or report.failed:
        _outcomes[marker].append((report.nodeid, report.passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        runs = _outcomes.get(number)
        if not runs:
            status = "NOT RUN"
        else:
            status = "PASS" if all(ok for _, ok in runs) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status:7s} {CRITERIA[number]} ({len(runs or [])} tests)")
