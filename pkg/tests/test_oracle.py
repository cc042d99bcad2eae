from math import comb

import numpy as np
import pytest
from conftest import brute_min_l0, planted_problem

from sitl1.errors import EnumerationTooLarge
from sitl1.oracle import (
    Certificate,
    Verdict,
    certify,
    extreme_point_check,
    is_extreme_point,
    l0_oracle,
    subset_residuals,
    support_oracle,
    zero_tol,
)
from sitl1.problem import Problem
from sitl1.sit import detect

WORKED = Problem(np.array([[-1.0], [1.0], [-10.0]]), np.array([-1.0, 1.0, 0.0]))


class FakeDetection:
    def __init__(self, support):
        self.support = tuple(support)
        self.l0_count = len(support)


def test_worked_example():
    res = l0_oracle(WORKED)
    assert res.min_l0 == 1
    assert res.supports == ((2,),)
    np.testing.assert_array_equal(res.solutions[0].e, [0.0, 0.0, 10.0])
    np.testing.assert_allclose(res.solutions[0].x, [1.0])
    assert res.enumerated == 3


def test_consistent_y(rng):
    a = rng.standard_normal((7, 2))
    res = l0_oracle(Problem(a, a @ [1.0, 2.0]))
    assert res.min_l0 == 0 and res.supports == ((),)


@pytest.mark.parametrize("seed", range(10))
def test_planted_three_sparse(seed):
    rng = np.random.default_rng(seed)
    p, _, e = planted_problem(rng, 10, 2, 3)
    res = l0_oracle(p)
    assert res.min_l0 <= 3
    planted = tuple(np.flatnonzero(e))
    cross = support_oracle(p, max_size=3)
    assert cross.min_l0 == res.min_l0
    if res.min_l0 == 3:
        assert planted in res.supports


def test_solution_invariants():
    p, _, _ = planted_problem(np.random.default_rng(3), 9, 2, 2)
    res = l0_oracle(p)
    for s in res.solutions:
        assert len(s.support) == res.min_l0
        # e is the residual with entries below the zero tolerance cleared
        assert np.abs(p.y - p.a @ s.x - s.e).max() <= zero_tol(p.y)
    assert len(set(res.supports)) == len(res.solutions)
    assert list(res.supports) == sorted(res.supports)
    assert res.enumerated <= comb(p.n, p.r)


def test_agrees_with_support_enumeration():
    for trial in range(100):
        rng = np.random.default_rng([41, trial])
        n = int(rng.integers(5, 13))
        r = int(rng.integers(1, 4))
        s = int(rng.integers(0, 4))
        p, _, _ = planted_problem(rng, n, r, s)
        rows = l0_oracle(p)
        supp = support_oracle(p)
        assert rows.min_l0 == supp.min_l0 == brute_min_l0(p.a, p.y), trial
        assert rows.supports == tuple(sorted(s.support for s in supp.solutions)), trial


def test_tied_supports_are_all_listed():
    # y fits both the first two and the last two rows exactly -> two sparsest supports
    a = np.ones((4, 1))
    res = l0_oracle(Problem(a, np.array([1.0, 1.0, 5.0, 5.0])))
    assert res.min_l0 == 2
    assert res.supports == ((0, 1), (2, 3))


def test_cap():
    rng = np.random.default_rng(0)
    p = Problem(rng.standard_normal((20, 5)), rng.standard_normal(20))
    with pytest.raises(EnumerationTooLarge):
        l0_oracle(p, cap=100)
    cert = certify(p, FakeDetection([0]), cap=100)
    assert cert.verdict is Verdict.TOO_LARGE and str(cert) == "OracleTooLarge"


def test_certify_worked_example():
    assert str(certify(WORKED, FakeDetection([2]))) == "Exact"
    lad = certify(WORKED, FakeDetection([0, 1]))
    assert lad == Certificate(Verdict.SUBOPTIMAL, 1) and str(lad) == "SuboptimalBy(1)"
    # right size, wrong support
    assert str(certify(WORKED, FakeDetection([0]))) == "SuboptimalBy(0)"


def test_certify_real_detection():
    det = detect(WORKED, 50, 1e-7, 0)
    assert str(certify(WORKED, det)) == "Exact"


def test_extreme_point_pairwise():
    c = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert not is_extreme_point([0.5, 0.5, 0.0], c)
    assert is_extreme_point([1.0, 0.0, 0.0], c)
    assert is_extreme_point([0.0, 0.0, 3.0], c)


@pytest.mark.parametrize("seed", range(10))
def test_sparsest_errors_are_extreme(seed):
    p, _, _ = planted_problem(np.random.default_rng([8, seed]), 9, 2, 2)
    assert extreme_point_check(p)
    assert subset_residuals(p).shape == (comb(9, 2), 9)
