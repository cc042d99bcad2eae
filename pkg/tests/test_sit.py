import numpy as np
import pytest
from conftest import brute_min_l0, planted_problem

from sitl1.errors import (
    AllSamplesDegenerate,
    DegenerateSample,
    DegenerateY,
    DimensionMismatch,
    InvalidInput,
    RankDeficientComplement,
)
from sitl1.l1solve import Status, solve_lad
from sitl1.problem import Problem
from sitl1.sit import (
    CandidateA,
    Detection,
    build_frame,
    build_phi,
    candidate_rng,
    converted_system,
    detect,
    detect_once,
    direct_candidate,
    draw_candidate,
    phi_times_ft,
    recover_underdetermined,
    recover_x,
    sample_candidate,
    sample_detections,
    select_best,
    soft_threshold,
    verify_sip,
)

WORKED = Problem(np.array([[-1.0], [1.0], [-10.0]]), np.array([-1.0, 1.0, 0.0]))
H = 1.0 / np.sqrt(2.0)
# exact form of the worked example's rotation (entries 1/2 and 1/sqrt 2)
WORKED_PHI = np.array([[0.5, 0.5, H], [0.5, 0.5, -H], [-H, H, 0.0]])


def random_problem(seed, n=10, r=3):
    rng = np.random.default_rng(seed)
    return Problem(rng.standard_normal((n, r)), rng.standard_normal(n))


# --- frame ------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_frame_invariants(seed):
    p = random_problem(seed)
    fr = build_frame(p)
    q = np.column_stack([fr.u_r, fr.u_next, fr.u_comp])
    assert q.shape == (10, 10)
    np.testing.assert_allclose(q.T @ q, np.eye(10), atol=1e-9)
    assert fr.t == pytest.approx(fr.u_next @ p.y, abs=1e-12)
    assert np.abs(fr.u_comp.T @ p.y).max() <= 1e-9 * np.linalg.norm(p.y)
    # u_r spans the columns of A
    proj = fr.u_r @ (fr.u_r.T @ p.a)
    np.testing.assert_allclose(proj, p.a, atol=1e-9)


def test_frame_worked_example():
    fr = build_frame(WORKED)
    # |t| is the distance from y to span(A): sqrt(2 - (A'y)^2 / |A|^2) with A'y = 2, |A|^2 = 102
    assert abs(fr.t) == pytest.approx(np.sqrt(2.0 - 4.0 / 102.0), abs=1e-12)
    # the transformed y keeps the full norm of y, not just |t|
    assert np.linalg.norm(WORKED_PHI @ WORKED.y) == pytest.approx(np.sqrt(2.0), abs=1e-12)
    np.testing.assert_allclose(np.abs(fr.u_comp.ravel()), [H, H, 0.0], atol=1e-12)


def test_frame_consistent_y():
    a = np.random.default_rng(1).standard_normal((6, 2))
    with pytest.raises(DegenerateY):
        build_frame(Problem(a, a @ np.ones(2)))


# --- candidates -------------------------------------------------------------


def test_candidate_invariants():
    fr = build_frame(random_problem(2))
    for i in range(1, 20):
        c = sample_candidate(fr, 9, i)
        assert np.linalg.norm(c.a) == pytest.approx(1.0, abs=1e-10)
        assert np.abs(fr.u_comp.T @ c.a).max() <= 1e-9
        assert c.seed_index == i


def test_candidate_reproducible():
    fr = build_frame(random_problem(3))
    a1 = draw_candidate(fr, candidate_rng(5, 4), 4).a
    a2 = draw_candidate(fr, candidate_rng(5, 4), 4).a
    np.testing.assert_array_equal(a1, a2)
    assert not np.allclose(a1, draw_candidate(fr, candidate_rng(5, 3), 3).a)


def test_candidate_basis_draw_is_direct():
    class Fixed:
        def standard_normal(self, k):
            f = np.zeros(k)
            f[-1] = 1.0
            return f

    fr = build_frame(random_problem(4))
    np.testing.assert_array_equal(draw_candidate(fr, Fixed()).a, fr.u_next)
    np.testing.assert_array_equal(direct_candidate(fr).a, fr.u_next)
    assert sample_candidate(fr, 0, 0).seed_index == 0


# --- one sample -----------------------------------------------------------------


def test_detect_once_separating_candidate():
    fr = build_frame(WORKED)
    # e_3 lies in span([A, y]) and is the direction of the sparsest error
    det = detect_once(WORKED, fr, CandidateA(np.array([0.0, 0.0, 1.0]), 1), 1e-7 * abs(fr.t))
    assert det.support == (2,)
    np.testing.assert_allclose(det.e_scaled, [0, 0, 10], atol=1e-3)
    np.testing.assert_allclose(det.x_hat, [1.0], atol=1e-9)
    assert det.report.status is Status.OPTIMAL


def test_detect_once_direct_candidate_worked_example():
    fr = build_frame(WORKED)
    det = detect_once(WORKED, fr, direct_candidate(fr), 1e-7 * abs(fr.t))
    assert det.support == (0, 1)


@pytest.mark.parametrize("seed", range(10))
def test_direct_candidate_is_lad(seed):
    p, _, _ = planted_problem(np.random.default_rng(seed), 20, 3, 4)
    eps = 1e-6
    fr = build_frame(p)
    det = detect_once(p, fr, direct_candidate(fr), eps)
    lad_resid = p.y - p.a @ solve_lad(p.a, p.y).solution
    # unthresholded solution is the LAD residual itself
    np.testing.assert_allclose(det.e_raw, lad_resid, atol=1e-7)
    assert det.support == tuple(np.flatnonzero(np.abs(lad_resid) > eps))


@pytest.mark.parametrize("seed", range(10))
def test_rescaled_error_leaves_span_a(seed):
    p, _, _ = planted_problem(np.random.default_rng(seed), 12, 3, 2)
    fr = build_frame(p)
    for i in range(1, 6):
        try:
            det = detect_once(p, fr, sample_candidate(fr, seed, i), 0.0)
        except DegenerateSample:
            continue
        rest = p.y - det.e_scaled
        tol = 1e-7 * np.linalg.norm(p.y)
        assert np.abs(fr.u_comp.T @ rest).max() <= tol
        assert abs(fr.u_next @ rest) <= tol


def test_over_thresholding_is_degenerate():
    fr = build_frame(WORKED)
    with pytest.raises(DegenerateSample):
        detect_once(WORKED, fr, direct_candidate(fr), 100.0)


def test_negative_eps_rejected():
    fr = build_frame(WORKED)
    with pytest.raises(InvalidInput):
        detect_once(WORKED, fr, direct_candidate(fr), -1.0)


def test_converted_system_shape():
    fr = build_frame(random_problem(6, n=9, r=2))
    f, b = converted_system(fr)
    assert f.shape == (7, 9) and b[0] == fr.t and not b[1:].any()


def test_soft_threshold():
    np.testing.assert_allclose(soft_threshold([3.0, -0.5, -2.0], 1.0), [2.0, 0.0, -1.0])


# --- x recovery -----------------------------------------------------------------


def test_recover_x_cases(rng):
    a = rng.standard_normal((6, 2))
    x0 = rng.standard_normal(2)
    np.testing.assert_allclose(recover_x(Problem(a, a @ x0), ()), x0, atol=1e-12)
    np.testing.assert_allclose(recover_x(WORKED, (2,)), [1.0], atol=1e-12)
    with pytest.raises(RankDeficientComplement):
        recover_x(WORKED, (0, 1, 2))


# --- the search -----------------------------------------------------------------


def test_detect_worked_example():
    det = detect(WORKED, 50, 1e-7 * abs(build_frame(WORKED).t), 0)
    assert det.l0_count == 1 and det.support == (2,)


def test_detect_consistent_y_returns_zero(rng):
    a = rng.standard_normal((8, 2))
    x0 = np.array([1.0, -2.0])
    det = detect(Problem(a, a @ x0), 10, 0.1, 0)
    assert det.l0_count == 0 and not det.e_scaled.any()
    np.testing.assert_allclose(det.x_hat, x0, atol=1e-12)


def test_detect_rejects_zero_snbr():
    with pytest.raises(InvalidInput):
        detect(WORKED, 0, 0.1, 0)


@pytest.mark.parametrize("seed", range(3))
def test_monotone_in_snbr(seed):
    p, _, _ = planted_problem(np.random.default_rng(seed), 12, 2, 3)
    eps = 1e-7 * abs(build_frame(p).t)
    counts = [detect(p, k, eps, seed).l0_count for k in (1, 5, 20, 60)]
    assert counts == sorted(counts, reverse=True)
    # a larger run extends a smaller one sample by sample
    short = sample_detections(p, 5, eps, seed)
    long = sample_detections(p, 20, eps, seed)
    for d1, d2 in zip(short, long[:6]):
        assert (d1 is None) == (d2 is None)
        if d1 is not None:
            np.testing.assert_array_equal(d1.e_raw, d2.e_raw)


def test_detect_matches_brute_force_l0():
    hits = 0
    for trial in range(20):
        rng = np.random.default_rng([77, trial])
        p, _, _ = planted_problem(rng, 12, 2, 2)
        det = detect(p, 200, 1e-7 * abs(build_frame(p).t), trial)
        hits += det.l0_count == brute_min_l0(p.a, p.y)
    assert hits >= 19


def fake(l0, l1, idx, ok=True):
    from sitl1.l1solve import SolveReport

    e = np.zeros(4)
    e[:l0] = l1 / max(l0, 1)
    rep = SolveReport(e, l1, 0.0, 0.0, Status.OPTIMAL if ok else Status.MAX_ITER)
    return Detection(e, e, tuple(range(l0)), l0, 1.0, np.zeros(1), CandidateA(e, idx), rep)


def test_select_best_tie_breaks():
    assert select_best([fake(2, 1.0, 0), fake(1, 5.0, 1), fake(1, 5.0, 2)]).candidate.seed_index == 1
    assert select_best([fake(1, 5.0, 0), fake(1, 3.0, 3)]).candidate.seed_index == 3
    assert select_best([None, fake(1, 1.0, 0, ok=False), fake(3, 9.0, 2)]).candidate.seed_index == 2
    with pytest.raises(AllSamplesDegenerate):
        select_best([None, fake(1, 1.0, 0, ok=False)])


def test_best_sample_is_not_flagged_degenerate():
    for trial in range(10):
        rng = np.random.default_rng([88, trial])
        p, _, _ = planted_problem(rng, 10, 2, 2)
        det = detect(p, 100, 1e-7 * abs(build_frame(p).t), trial)
        if det.l0_count == brute_min_l0(p.a, p.y):
            assert det.report.status is Status.OPTIMAL


# --- explicit transforms --------------------------------------------------------


def test_build_phi_direct_is_identity():
    fr = build_frame(random_problem(7))
    np.testing.assert_allclose(build_phi(fr, direct_candidate(fr)), np.eye(10), atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_build_phi_properties(seed):
    fr = build_frame(random_problem(seed, n=8, r=2))
    cand = sample_candidate(fr, seed, 1)
    phi = build_phi(fr, cand)
    np.testing.assert_allclose(phi.T @ phi, np.eye(8), atol=1e-9)
    assert np.linalg.norm(phi @ fr.u_next - cand.a) <= 1e-9
    np.testing.assert_allclose(phi @ fr.u_comp, fr.u_comp, atol=1e-9)
    # span([A, y]) maps onto itself
    img = phi @ fr.span_basis
    assert np.abs(fr.u_comp.T @ img).max() <= 1e-9


def test_worked_phi_in_family():
    z = np.array([1.0, 1.0, 0.0])
    np.testing.assert_allclose(WORKED_PHI @ z, z, atol=1e-12)
    np.testing.assert_allclose(WORKED_PHI.T @ WORKED_PHI, np.eye(3), atol=1e-12)


def test_phi_times_ft_direct_collapses():
    fr = build_frame(random_problem(8))
    f = np.column_stack([fr.u_next, fr.u_comp]).T
    np.testing.assert_array_equal(phi_times_ft(fr, direct_candidate(fr), f), f.T)


def test_phi_times_ft_frame_rows():
    fr = build_frame(random_problem(9))
    cand = sample_candidate(fr, 1, 3)
    f = np.column_stack([fr.u_next, fr.u_comp]).T
    want = np.column_stack([cand.a, fr.u_comp])
    np.testing.assert_allclose(phi_times_ft(fr, cand, f), want, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_phi_times_ft_matches_explicit(seed):
    rng = np.random.default_rng(seed)
    fr = build_frame(random_problem(seed))
    cand = sample_candidate(fr, seed, 2)
    perp = np.column_stack([fr.u_next, fr.u_comp])
    f = rng.standard_normal((4, perp.shape[1])) @ perp.T
    np.testing.assert_allclose(phi_times_ft(fr, cand, f), build_phi(fr, cand) @ f.T, atol=1e-8)


def test_phi_times_ft_rejects_bad_rows():
    fr = build_frame(random_problem(10))
    with pytest.raises(InvalidInput):
        phi_times_ft(fr, direct_candidate(fr), fr.u_r.T)
    with pytest.raises(DimensionMismatch):
        phi_times_ft(fr, direct_candidate(fr), np.ones((2, 3)))


# --- under-determined recovery --------------------------------------------------


def test_recover_underdetermined_identity_block():
    f = np.hstack([np.eye(3), np.zeros((3, 4))])
    det = recover_underdetermined(f, [1.0, -2.0, 3.0], 20, 1e-8, 0)
    np.testing.assert_allclose(det.e_scaled, [1, -2, 3, 0, 0, 0, 0], atol=1e-9)


def test_recover_underdetermined_one_sparse():
    rng = np.random.default_rng(11)
    f = rng.standard_normal((4, 10))
    e0 = np.zeros(10)
    e0[7] = 3.0
    det = recover_underdetermined(f, f @ e0, 50, 1e-8, 0)
    assert det.support == (7,)
    np.testing.assert_allclose(det.e_scaled, e0, atol=1e-8)


@pytest.mark.slow
def test_recover_underdetermined_two_sparse_rate():
    hits = 0
    for trial in range(100):
        rng = np.random.default_rng([99, trial])
        f = rng.standard_normal((6, 12))
        e0 = np.zeros(12)
        e0[rng.choice(12, 2, replace=False)] = rng.choice([-1, 1], 2) * rng.uniform(1, 10, 2)
        det = recover_underdetermined(f, f @ e0, 200, 1e-8, trial)
        hits += det.l0_count == 2 and np.linalg.norm(f @ det.e_scaled - f @ e0) <= 1e-6 * np.linalg.norm(f @ e0)
    assert hits >= 95


def test_recover_underdetermined_infeasible():
    f = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    with pytest.raises(InvalidInput):
        recover_underdetermined(f, [1.0, 2.0], 5, 0.0, 0)


# --- invariance check -----------------------------------------------------------


def test_verify_sip_identity():
    rep = verify_sip(np.eye(10), random_problem(12))
    assert rep.passed


def test_verify_sip_worked_example():
    rep = verify_sip(WORKED_PHI, WORKED)
    assert rep.passed
    assert rep.min_l0_before == rep.min_l0_after == 1
    assert rep.supports_before == rep.supports_after == ((2,),)


def test_verify_sip_rejects_non_member():
    rep = verify_sip(np.diag([1.0, 2.0, 3.0]), WORKED)
    assert not rep.in_family and not rep.passed


@pytest.mark.parametrize("seed", range(30))
def test_verify_sip_random_family_members(seed):
    rng = np.random.default_rng([5, seed])
    n, r = int(rng.integers(6, 11)), int(rng.integers(1, 4))
    p, _, _ = planted_problem(rng, n, r, int(rng.integers(1, 3)))
    fr = build_frame(p)
    assert verify_sip(build_phi(fr, sample_candidate(fr, seed, 1)), p).passed
