import numpy as np
import pytest
from scipy import special

from graphfdr.estimators import EdgeStatistics


def stats_from_pvalues(P, scenario="b"):
    """One-sided statistics (n=1, sigma=1) whose edge p-values are ``P``."""
    P = np.asarray(P, dtype=float)
    W = np.where(P >= 1.0, -40.0, -special.ndtri(np.clip(P, 1e-300, 1.0)))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    S = np.ones_like(W)
    np.fill_diagonal(S, 0.0)
    return EdgeStatistics(W, S, 1, scenario)


def pvalue_matrix(d, entries, default=1.0):
    P = np.full((d, d), default)
    for (u, v), p in entries.items():
        P[u, v] = P[v, u] = p
    return P


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one acceptance verdict: ``acceptance(name, passed, detail)``."""
    store = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(name, passed, detail):
        store[name] = (bool(passed), detail)
        print(f"{name} {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(store, key=lambda s: int(s[1:])):
        passed, detail = store[name]
        terminalreporter.write_line(f"{name} {'PASS' if passed else 'FAIL'}  {detail}")
