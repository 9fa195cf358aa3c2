import numpy as np
import pytest

from hyperfact.matcore import random_unitary

CRITERIA = {
    1: "weight recurrence, exact",
    2: "2x2 counterexample end to end",
    3: "pencil identities",
    4: "transfer-function agreement",
    5: "telescoping isometry identity",
    6: "monotone positivity of f_r",
    7: "fixed point and Douglas step",
    8: "pure factor dilation",
    9: "general factor dilation",
    10: "compressed-symbol identities",
    11: "sufficiency decomposition and its failed converse",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes.setdefault(marker.args[0], []).append(rep.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = _outcomes.get(n)
        if runs is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(runs) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} [{status}] {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ginibre(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_contraction(rng, dim, norm=0.9):
    z = ginibre(rng, dim)
    return norm * z / np.linalg.norm(z, 2)


def random_psd(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = ginibre(rng, dim, rank)
    return g @ g.conj().T


__all__ = ["ginibre", "random_contraction", "random_psd", "random_unitary"]
