import numpy as np
import pytest
from scipy.optimize import linprog

from sitl1.problem import Problem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def planted_problem(rng, n, r, s, lo=1.0, hi=10.0):
    """Gaussian A with ``s`` errors of magnitude U(lo, hi) and random sign."""
    a = rng.standard_normal((n, r))
    e = np.zeros(n)
    idx = rng.choice(n, s, replace=False)
    e[idx] = rng.choice([-1.0, 1.0], s) * rng.uniform(lo, hi, s)
    x = rng.standard_normal(r)
    return Problem(a, a @ x + e), x, e


def highs_bp(f, b):
    """Independent basis pursuit reference via scipy's HiGHS."""
    n = f.shape[1]
    res = linprog(np.ones(2 * n), A_eq=np.hstack([f, -f]), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.x[:n] - res.x[n:], res.fun


def highs_lad(a, y, weights=None):
    """Independent (weighted) LAD reference via scipy's HiGHS."""
    n, r = a.shape
    w = np.ones(n) if weights is None else weights
    c = np.concatenate([np.zeros(r), w, w])
    res = linprog(c, A_eq=np.hstack([a, np.eye(n), -np.eye(n)]), b_eq=y,
                  bounds=[(None, None)] * r + [(0, None)] * (2 * n), method="highs")
    assert res.status == 0
    return res.x[:r], res.fun


def brute_min_l0(a, y, tol=1e-8):
    """Smallest ``|S|`` such that ``y`` restricted off ``S`` lies in ``span(A)``
    restricted off ``S``, by plain least squares over growing supports."""
    from itertools import combinations

    n = a.shape[0]
    scale = max(1.0, float(np.abs(y).max()))
    for k in range(n + 1):
        for s in combinations(range(n), k):
            keep = np.setdiff1d(np.arange(n), s)
            x = np.linalg.lstsq(a[keep], y[keep], rcond=None)[0]
            if np.abs(y[keep] - a[keep] @ x).max() <= tol * scale:
                return k
    return n


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def report_criterion(key, passed, detail):
    ACCEPTANCE_LINES[key] = f"{key} {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
