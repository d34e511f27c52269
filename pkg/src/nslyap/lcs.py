"""Linear complementarity systems x' = A x + B u, 0 <= u ⊥ C x + D u >= 0."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from . import integrator as itg
from . import operators as ops
from .errors import IterationCap, NoSolution, NotMonotone, NotRepresentable, StepTooLarge

LCP_TOL = 1e-10
PGS_MAX_SWEEPS = 50_000
PGS_OMEGA = 1.2
POLISH_EVERY = 25
STALL_WINDOWS = 8


def _mat(a, shape=None):
    a = np.atleast_2d(np.array(a, dtype=float))
    if shape is not None and a.shape != shape:
        raise geo.DimensionMismatch(f"expected shape {shape}, got {a.shape}")
    return a


def _check_monotone(M):
    if np.linalg.eigvalsh(M + M.T).min() < -LCP_TOL:
        raise NotMonotone("M + M' is not positive semidefinite")


@dataclass(frozen=True, eq=False)
class LCSSystem:
    A_lin: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        A = _mat(self.A_lin)
        n = A.shape[0]
        if A.shape != (n, n):
            raise geo.DimensionMismatch("A_lin must be square")
        B = np.array(self.B, dtype=float).reshape(n, -1)
        m = B.shape[1]
        C = _mat(self.C).reshape(m, n)
        D = _mat(self.D, (m, m))
        _check_monotone(D)
        for name, v in (("A_lin", A), ("B", B), ("C", C), ("D", D)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        x0 = geo.as_vector(self.x0, n)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self):
        return self.A_lin.shape[0]

    @property
    def m(self):
        return self.D.shape[0]

    @property
    def h_max(self) -> float:
        nrm = np.linalg.norm(self.A_lin, 2)
        return np.inf if nrm == 0 else 1.0 / (10.0 * nrm)


@dataclass(frozen=True)
class LCPSolution:
    u: np.ndarray
    w: np.ndarray
    neg_u: float
    neg_w: float
    complementarity: float
    method: str

    @property
    def residual(self) -> float:
        return max(self.neg_u, self.neg_w, abs(self.complementarity))


def _certify(M, q, u, method):
    w = q + M @ u
    return LCPSolution(u, w, float(max(0.0, -u.min(initial=0.0))), float(max(0.0, -w.min(initial=0.0))),
                       float(u @ w), method)


def _accept(sol, q):
    tol = LCP_TOL
    return sol.neg_u <= tol and sol.neg_w <= tol and abs(sol.complementarity) <= tol * (1 + np.linalg.norm(q))


def _polish(M, q, u):
    """Solve the equality system on the support of u and clean up."""
    m = q.size
    scale = 1e-9 * (1 + np.abs(u).max())
    J = np.flatnonzero(u > scale)
    v = np.zeros(m)
    if J.size:
        sol, *_ = np.linalg.lstsq(M[np.ix_(J, J)], -q[J], rcond=None)
        v[J] = sol
    v[np.abs(v) < 1e-300] = 0.0
    return np.maximum(v, 0.0) if np.all(v >= -LCP_TOL) else v


def _pgs(M, q, max_sweeps):
    m = q.size
    diag = np.diag(M).copy()
    if np.any(diag <= 0):
        return None
    u = np.zeros(m)
    best, stalled = np.inf, 0
    for k in range(1, max_sweeps + 1):
        for i in range(m):
            r = q[i] + M[i] @ u
            u[i] = max(0.0, u[i] - PGS_OMEGA * r / diag[i])
        if k % POLISH_EVERY == 0:
            cand = _certify(M, q, _polish(M, q, u), "pgs")
            if _accept(cand, q):
                return cand
            # natural residual ||min(u, w)||; give up on divergence or stagnation
            nat = float(np.linalg.norm(np.minimum(u, q + M @ u)))
            if not np.isfinite(nat):
                return None
            if nat < 0.99 * best:
                best, stalled = nat, 0
            else:
                stalled += 1
                if stalled >= STALL_WINDOWS:
                    return None
    return None


def _lemke(M, q, max_pivots=None):
    """Lemke's complementary pivoting with covering vector 1; ties broken by smallest row."""
    m = q.size
    max_pivots = max_pivots or 50 * (m + 1) ** 2
    # columns: w (0..m-1), u (m..2m-1), z0 (2m), rhs
    T = np.hstack([np.eye(m), -M, -np.ones((m, 1)), q[:, None]])
    basis = list(range(m))
    z0 = 2 * m

    def pivot(r, c):
        T[r] /= T[r, c]
        for i in range(m):
            if i != r and T[i, c] != 0:
                T[i] -= T[i, c] * T[r]
        leaving = basis[r]
        basis[r] = c
        return leaving

    r = int(np.argmin(q))
    leaving = pivot(r, z0)
    for _ in range(max_pivots):
        enter = leaving + m if leaving < m else leaving - m
        col = T[:, enter]
        rows = np.flatnonzero(col > 1e-12)
        if rows.size == 0:
            raise NoSolution("Lemke ray termination: the LCP has no solution")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1 + abs(best))]
        z_rows = [i for i in ties if basis[i] == z0]
        r = z_rows[0] if z_rows else int(ties[0])
        leaving = pivot(r, enter)
        if leaving == z0:
            u = np.zeros(m)
            for i, b in enumerate(basis):
                if m <= b < 2 * m:
                    u[b - m] = T[i, -1]
            return u
    raise IterationCap("Lemke pivot cap reached")


def solve_lcp(M, q) -> LCPSolution:
    """u >= 0, w = q + M u >= 0, u'w = 0 for M + M' positive semidefinite."""
    q = geo.as_vector(q)
    M = _mat(M, (q.size, q.size))
    _check_monotone(M)
    if np.all(q >= 0):
        return _certify(M, q, np.zeros(q.size), "trivial")
    sol = _pgs(M, q, PGS_MAX_SWEEPS if np.all(np.diag(M) > 0) else 0)
    if sol is not None:
        return sol
    u = _lemke(M, q)
    sol = _certify(M, q, np.maximum(u, 0.0), "lemke")
    if not _accept(sol, q):
        polished = _certify(M, q, _polish(M, q, u), "lemke")
        if _accept(polished, q):
            return polished
        raise NoSolution(f"LCP residual {sol.residual:.3g} above tolerance")
    return sol


def simulate_lcs(lcs: LCSSystem, T: float, h: float, enforce_step: bool = True) -> itg.Trajectory:
    """Explicit Euler in x with u_k from LCP(D, C x_k) at every grid time."""
    if enforce_step and h > lcs.h_max * (1 + 1e-12):
        raise StepTooLarge(f"h={h} exceeds 1/(10 ||A_lin||) = {lcs.h_max}")
    times = itg._grid(T, h)
    N = times.size - 1
    xs = np.empty((N + 1, lcs.n))
    us = np.empty((N + 1, lcs.m))
    comp = np.empty(N + 1)
    x = lcs.x0.copy()
    for k in range(N + 1):
        try:
            sol = solve_lcp(lcs.D, lcs.C @ x)
        except NoSolution as exc:
            raise NoSolution(f"step {k}: {exc}") from exc
        xs[k], us[k], comp[k] = x, sol.u, sol.residual
        if k < N:
            x = x + (times[k + 1] - times[k]) * (lcs.A_lin @ x + lcs.B @ sol.u)
    derivs = np.diff(xs, axis=0) / np.diff(times)[:, None] if N else np.zeros((0, lcs.n))
    return itg.Trajectory(h, times, xs, np.zeros(N + 1), derivs, inputs=us, comp_residuals=comp)


def lcs_to_inclusion(lcs: LCSSystem) -> itg.SystemSpec:
    """x' in A_lin x - N_K(x) with K = {C x >= 0}; needs D = 0 and B = C'."""
    if not np.allclose(lcs.D, 0.0):
        raise NotRepresentable("bridge needs D = 0")
    if not np.allclose(lcs.B, lcs.C.T):
        raise NotRepresentable("bridge needs B = C'")
    K = geo.Polyhedron(-lcs.C, np.zeros(lcs.m))
    if not geo.has_interior(K):
        raise NotRepresentable("K = {Cx >= 0} has empty interior")
    return itg.SystemSpec(ops.NormalConeOf(K), itg.AffineDrift(lcs.A_lin))
