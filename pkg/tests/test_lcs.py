import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from nslyap import integrator as itg
from nslyap import lcs
from nslyap.errors import NoSolution, NotMonotone, NotRepresentable, StepTooLarge


def enumerate_lcp(M, q, tol=1e-9):
    """All complementary bases: w_a = 0, u_b = 0; keep the sign-feasible ones."""
    m = q.size
    found = []
    for r in range(m + 1):
        for a in itertools.combinations(range(m), r):
            a = list(a)
            u = np.zeros(m)
            if a:
                Maa = M[np.ix_(a, a)]
                sol, *_ = np.linalg.lstsq(Maa, -q[a], rcond=None)
                if np.linalg.norm(Maa @ sol + q[a]) > 1e-8 * (1 + np.linalg.norm(q)):
                    continue
                u[a] = sol
            w = q + M @ u
            if u.min() >= -tol and w.min() >= -tol:
                found.append((u, w))
    return found


def random_monotone(rng, m, rank=None):
    R = rng.standard_normal((m, rank or m))
    S = rng.standard_normal((m, m))
    return R @ R.T + 0.5 * (S - S.T) * rng.uniform(0, 1)


def test_solve_examples():
    sol = lcs.solve_lcp(np.eye(2), [-1.0, 2.0])
    assert np.allclose(sol.u, [1.0, 0.0]) and np.allclose(sol.w, [0.0, 2.0])
    sol = lcs.solve_lcp(np.eye(3), [1.0, 0.0, 2.0])
    assert np.all(sol.u == 0) and np.allclose(sol.w, [1.0, 0.0, 2.0])
    with pytest.raises(NotMonotone):
        lcs.solve_lcp([[-1.0]], [1.0])


def test_matches_enumeration_definite():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 7))
        M = random_monotone(rng, m) + 1e-2 * np.eye(m)
        q = rng.standard_normal(m) * 3
        sol = lcs.solve_lcp(M, q)
        oracle = enumerate_lcp(M, q)
        assert oracle
        assert np.allclose(sol.u, oracle[0][0], atol=1e-7)
        assert sol.residual <= lcs.LCP_TOL * (1 + np.linalg.norm(q))


def test_matches_enumeration_singular():
    rng = np.random.default_rng(1)
    for _ in range(100):
        m = int(rng.integers(2, 7))
        M = random_monotone(rng, m, rank=int(rng.integers(1, m)))
        u0 = np.where(rng.random(m) < 0.5, rng.uniform(0, 2, m), 0.0)
        w0 = np.where(u0 > 0, 0.0, rng.uniform(0, 2, m))
        q = w0 - M @ u0
        sol = lcs.solve_lcp(M, q)
        assert sol.residual <= lcs.LCP_TOL * (1 + np.linalg.norm(q))
        # w is unique for monotone M even when u is not
        oracle = enumerate_lcp(M, q)
        assert oracle and all(np.allclose(sol.w, w, atol=1e-6) for _, w in oracle)


def scalar(x0):
    return lcs.LCSSystem([[-1.0]], [[1.0]], [[1.0]], [[1.0]], [x0])


def test_simulate_examples():
    traj = lcs.simulate_lcs(scalar(1.0), 1.0, 1e-3)
    assert traj.final[0] == pytest.approx(math.exp(-1), abs=5e-3)
    assert np.all(traj.inputs == 0)
    traj = lcs.simulate_lcs(scalar(-1.0), 1.0, 1e-3)
    assert traj.final[0] == pytest.approx(-math.exp(-2), abs=5e-3)
    assert np.allclose(traj.inputs[:, 0], -traj.states[:, 0])
    assert traj.comp_residuals.max() <= 1e-10 * 2
    with pytest.raises(StepTooLarge):
        lcs.simulate_lcs(scalar(1.0), 1.0, 0.5)


def test_pure_linear_matches_matrix_exponential():
    A = np.array([[-1.0, 2.0], [-2.0, -1.0]])
    sys_ = lcs.LCSSystem(A, np.zeros((2, 1)), np.zeros((1, 2)), [[1.0]], [1.0, 0.5])
    h = 1e-3
    traj = lcs.simulate_lcs(sys_, 1.0, h)
    exact = np.array([expm(A * t) @ [1.0, 0.5] for t in traj.times])
    assert np.max(np.abs(traj.states - exact)) <= 10 * h


def test_csv_columns(tmp_path):
    traj = lcs.simulate_lcs(scalar(-1.0), 0.01, 1e-3)
    traj.to_csv(tmp_path / "l.csv")
    header, rows = itg.read_trajectory_csv(tmp_path / "l.csv")
    assert header == ["t", "x_1", "residual", "u_1", "comp_residual"]
    assert np.array_equal(rows[:, 3], traj.inputs[:, 0])


@pytest.mark.parametrize("x0", [[1.0, 1.0], [0.0, 0.5], [0.3, 0.0]])
def test_bridge_agrees(x0):
    sys_ = lcs.LCSSystem(-np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)), x0)
    h = 1e-3
    a = lcs.simulate_lcs(sys_, 1.0, h)
    b = itg.simulate(lcs.lcs_to_inclusion(sys_), x0, 1.0, h)
    assert np.max(np.abs(a.states - b.states)) <= 10 * h
    assert a.states.min() >= -1e-8 and b.states.min() >= -1e-8
    if x0 == [1.0, 1.0]:
        assert np.allclose(a.final, math.exp(-1), atol=5e-3)


def test_explicit_scheme_aborts_when_the_wall_is_crossed():
    # with D = 0 the multiplier cannot act before C x goes negative
    A = np.array([[-0.5, 0.0], [1.0, -1.0]])
    C = np.array([[0.0, 1.0]])
    sys_ = lcs.LCSSystem(A, C.T, C, [[0.0]], [-1.0, 0.2])
    with pytest.raises(NoSolution, match="step"):
        lcs.simulate_lcs(sys_, 1.0, 1e-3)
    b = itg.simulate(lcs.lcs_to_inclusion(sys_), sys_.x0, 1.0, 1e-3)
    assert b.states[:, 1].min() >= -1e-12


def test_bridge_preconditions():
    with pytest.raises(NotRepresentable):
        lcs.lcs_to_inclusion(lcs.LCSSystem(-np.eye(1), [[1.0]], [[1.0]], [[1.0]], [1.0]))
    with pytest.raises(NotRepresentable):
        lcs.lcs_to_inclusion(lcs.LCSSystem(-np.eye(1), [[2.0]], [[1.0]], [[0.0]], [1.0]))
    with pytest.raises(NotMonotone):
        lcs.LCSSystem(-np.eye(1), [[1.0]], [[1.0]], [[-1.0]], [1.0])
