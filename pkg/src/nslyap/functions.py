"""Catalog of extended-real candidate functions with exact nonsmooth calculus.

Members: Quadratic, Affine, ScaledNorm, MaxOf, MinOf, PlusIndicator, Envelope.
The Moreau envelope uses the weight 1/delta (not 1/(2 delta)):

    V_delta(y) = inf_z  V(z) + ||y - z||^2 / delta
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import (
    DimensionMismatch,
    DomainViolation,
    NonConvergence,
    NotConvex,
    NotNonnegative,
    UnboundedBelow,
    UnsupportedVariant,
)

ACTIVE_TOL = 1e-10


class SubdiffKind(enum.Enum):
    PROXIMAL = "proximal"
    FRECHET = "frechet"
    LIMITING = "limiting"
    CLARKE = "clarke"
    HORIZONTAL = "horizontal"


class _Empty:
    """Marker for an empty subdifferential."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "EMPTY"


EMPTY = _Empty()


class FunctionSpec:
    dim: int

    @property
    def is_convex(self) -> bool:
        raise NotImplementedError

    @property
    def domain(self) -> geo.ConvexSet:
        return geo.WholeSpace(self.dim)

    def value(self, x) -> float:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)


def _active(values, tol, pick_max=True):
    best = values.max() if pick_max else values.min()
    gap = tol * (1.0 + abs(best))
    if pick_max:
        return np.flatnonzero(values >= best - gap), best
    return np.flatnonzero(values <= best + gap), best


@dataclass(frozen=True, eq=False)
class Quadratic(FunctionSpec):
    """0.5 x'Px + q'x + c."""

    P: np.ndarray
    q: np.ndarray = None
    c: float = 0.0

    def __post_init__(self):
        P = np.atleast_2d(np.array(self.P, dtype=float))
        if P.shape[0] != P.shape[1]:
            raise DimensionMismatch("P must be square")
        P = 0.5 * (P + P.T)
        q = np.zeros(P.shape[0]) if self.q is None else geo.as_vector(self.q, P.shape[0])
        P.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self):
        return self.P.shape[0]

    @property
    def is_convex(self):
        return bool(np.linalg.eigvalsh(self.P).min() >= -1e-12)

    def value(self, x):
        x = geo.as_vector(x, self.dim)
        return float(0.5 * x @ self.P @ x + self.q @ x + self.c)

    def gradient(self, x):
        return self.P @ geo.as_vector(x, self.dim) + self.q


@dataclass(frozen=True, eq=False)
class Affine(FunctionSpec):
    q: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        q = geo.as_vector(self.q)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self):
        return self.q.size

    is_convex = True

    def value(self, x):
        return float(self.q @ geo.as_vector(x, self.dim) + self.c)

    def gradient(self, x):
        geo.as_vector(x, self.dim)
        return np.array(self.q)


def constant(dim: int, c: float = 0.0) -> Affine:
    return Affine(np.zeros(dim), c)


@dataclass(frozen=True, eq=False)
class ScaledNorm(FunctionSpec):
    """weight * ||x||_p for p in {1, 2}."""

    weight: float
    p: int
    dim: int

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        object.__setattr__(self, "weight", float(self.weight))

    is_convex = True

    def value(self, x):
        return self.weight * float(np.linalg.norm(geo.as_vector(x, self.dim), self.p))


@dataclass(frozen=True, eq=False)
class MaxOf(FunctionSpec):
    """Pointwise maximum of Quadratic/Affine pieces."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces or not all(isinstance(p, (Quadratic, Affine)) for p in pieces):
            raise TypeError("pieces must be Quadratic or Affine")
        if len({p.dim for p in pieces}) != 1:
            raise DimensionMismatch("pieces differ in dimension")
        object.__setattr__(self, "pieces", pieces)

    @property
    def dim(self):
        return self.pieces[0].dim

    @property
    def is_convex(self):
        return all(p.is_convex for p in self.pieces)

    def piece_values(self, x):
        return np.array([p.value(x) for p in self.pieces])

    def value(self, x):
        return float(self.piece_values(x).max())


@dataclass(frozen=True, eq=False)
class MinOf(FunctionSpec):
    """Pointwise minimum of Quadratic/Affine pieces (concave kinks)."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces or not all(isinstance(p, (Quadratic, Affine)) for p in pieces):
            raise TypeError("pieces must be Quadratic or Affine")
        if len({p.dim for p in pieces}) != 1:
            raise DimensionMismatch("pieces differ in dimension")
        object.__setattr__(self, "pieces", pieces)

    @property
    def dim(self):
        return self.pieces[0].dim

    @property
    def is_convex(self):
        return len(self.pieces) == 1 and self.pieces[0].is_convex

    def piece_values(self, x):
        return np.array([p.value(x) for p in self.pieces])

    def value(self, x):
        return float(self.piece_values(x).min())


@dataclass(frozen=True, eq=False)
class PlusIndicator(FunctionSpec):
    """base + indicator of a closed convex set."""

    base: FunctionSpec
    set: geo.ConvexSet

    def __post_init__(self):
        if self.base.dim != self.set.dim:
            raise DimensionMismatch("base and set differ in dimension")

    @property
    def dim(self):
        return self.base.dim

    @property
    def is_convex(self):
        return self.base.is_convex

    @property
    def domain(self):
        inner = self.base.domain
        if isinstance(inner, geo.WholeSpace):
            return self.set
        return geo.Intersection((inner, self.set))

    def value(self, x):
        x = geo.as_vector(x, self.dim)
        if not self.set.contains(x):
            return np.inf
        return self.base.value(x)


def indicator(S: geo.ConvexSet) -> PlusIndicator:
    return PlusIndicator(constant(S.dim), S)


@dataclass(frozen=True, eq=False)
class Envelope(FunctionSpec):
    """Moreau envelope inf_z base(z) + ||y - z||^2 / delta of a convex base."""

    base: FunctionSpec
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.base.is_convex:
            raise NotConvex("envelope base must be convex")
        if infimum(self.base) == -np.inf:
            raise UnboundedBelow("envelope base must be bounded below")
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def dim(self):
        return self.base.dim

    is_convex = True

    def value(self, x):
        x = geo.as_vector(x, self.dim)
        z = prox_point(self.base, self.delta, x)
        return float(self.base.value(z) + np.sum((x - z) ** 2) / self.delta)

    def gradient(self, x):
        x = geo.as_vector(x, self.dim)
        return 2.0 * (x - prox_point(self.base, self.delta, x)) / self.delta


# ---------------------------------------------------------------------------
# evaluation and subdifferentials


def evaluate(V: FunctionSpec, x) -> float:
    """Value of V at x; +inf outside the effective domain."""
    return V.value(geo.as_vector(x, V.dim))


def _box_vertices(B: geo.Box):
    return np.array(list(itertools.product(*zip(B.lo, B.hi))), dtype=float)


def _add_cone(D, gens):
    """Minkowski sum of a catalog value set with cone(gens)."""
    if not gens:
        return D
    gens = np.array(gens)
    if isinstance(D, geo.Singleton):
        return geo.PolyhedralCone(gens, D.point)
    if isinstance(D, geo.PolyhedralCone):
        return geo.PolyhedralCone(np.vstack([D.generators, gens]), D.apex)
    if isinstance(D, geo.Hull):
        return geo.Hull(D.points, np.vstack([D.rays, gens]))
    if isinstance(D, geo.Box):
        return geo.Hull(_box_vertices(D), gens)
    raise UnsupportedVariant(f"sum of {type(D).__name__} with a normal cone")


def _hull_or_point(grads):
    uniq = []
    for g in grads:
        if not any(np.allclose(g, u, atol=1e-12, rtol=1e-12) for u in uniq):
            uniq.append(g)
    if len(uniq) == 1:
        return geo.Singleton(uniq[0])
    return geo.Hull(np.array(uniq))


def _require_domain(V, x):
    x = geo.as_vector(x, V.dim)
    if not np.isfinite(V.value(x)):
        raise DomainViolation("point outside the effective domain")
    return x


def subdifferential(V: FunctionSpec, x, kind: SubdiffKind = SubdiffKind.PROXIMAL,
                    tol: float = ACTIVE_TOL):
    """Subdifferential of the requested kind as a ConvexSet, or ``EMPTY``.

    ``tol`` is the activity tolerance for kinks and constraints.
    """
    kind = SubdiffKind(kind)
    x = _require_domain(V, x)
    return _subdiff(V, x, kind, tol)


def _subdiff(V, x, kind, tol):
    n = V.dim
    if kind is SubdiffKind.HORIZONTAL:
        if isinstance(V, PlusIndicator):
            inner = _subdiff(V.base, x, kind, tol)
            return _add_cone(inner, geo.normal_generators(V.set, x, max(tol, geo.EPS_CONE)))
        return geo.Singleton(np.zeros(n))
    if isinstance(V, (Quadratic, Affine, Envelope)):
        return geo.Singleton(V.gradient(x))
    if isinstance(V, ScaledNorm):
        w = V.weight
        if V.p == 1:
            small = np.abs(x) <= tol
            s = np.sign(x) * w
            return geo.Box(np.where(small, -w, s), np.where(small, w, s))
        nx = np.linalg.norm(x)
        if nx <= tol:
            return geo.Ball(np.zeros(n), w)
        return geo.Singleton(w * x / nx)
    if isinstance(V, MaxOf):
        idx, _ = _active(V.piece_values(x), tol, pick_max=True)
        return _hull_or_point([V.pieces[i].gradient(x) for i in idx])
    if isinstance(V, MinOf):
        idx, _ = _active(V.piece_values(x), tol, pick_max=False)
        D = _hull_or_point([V.pieces[i].gradient(x) for i in idx])
        if isinstance(D, geo.Singleton):
            return D
        if kind in (SubdiffKind.PROXIMAL, SubdiffKind.FRECHET):
            return EMPTY
        # limiting set is the finite set of active gradients; its hull is reported
        return D
    if isinstance(V, PlusIndicator):
        inner = _subdiff(V.base, x, kind, tol)
        if inner is EMPTY:
            return EMPTY
        return _add_cone(inner, geo.normal_generators(V.set, x, max(tol, geo.EPS_CONE)))
    raise UnsupportedVariant(type(V).__name__)


def dini_sets(V: FunctionSpec, x, tol: float = ACTIVE_TOL) -> list:
    """Sets D_i with V'(x; v) = min_i support(D_i, v) on the catalog."""
    x = _require_domain(V, x)
    return _dini_sets(V, x, tol)


def _dini_sets(V, x, tol):
    if isinstance(V, MinOf):
        idx, _ = _active(V.piece_values(x), tol, pick_max=False)
        return [geo.Singleton(V.pieces[i].gradient(x)) for i in idx]
    if isinstance(V, PlusIndicator):
        gens = geo.normal_generators(V.set, x, max(tol, geo.EPS_CONE))
        return [_add_cone(D, gens) for D in _dini_sets(V.base, x, tol)]
    return [_subdiff(V, x, SubdiffKind.CLARKE, tol)]


def dini_derivative(V: FunctionSpec, x, v) -> float:
    """Lower Dini directional derivative V'(x; v) (may be +inf)."""
    x = _require_domain(V, x)
    v = geo.as_vector(v, V.dim)
    return min(geo.support(D, v) for D in _dini_sets(V, x, ACTIVE_TOL))


def _probe_directions(n, count=8):
    rng = np.random.default_rng(12345)
    dirs = rng.standard_normal((count, n))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def dini_numeric(V: FunctionSpec, x, v, kmax: int = 20, n_dirs: int = 8) -> float:
    """Sampled liminf of difference quotients over t = 2^-k and perturbed directions."""
    x = _require_domain(V, x)
    v = geo.as_vector(v, V.dim)
    fx = V.value(x)
    dirs = _probe_directions(V.dim, n_dirs)
    tail = []
    for k in range(kmax - 2, kmax + 1):
        t = 2.0 ** -k
        ws = [v] + [v + t * d for d in dirs]
        tail.append(min((V.value(x + t * w) - fx) / t for w in ws))
    return float(min(tail))


# ---------------------------------------------------------------------------
# envelopes and prox


def _cvx_expr(V, z):
    import cvxpy as cp

    if isinstance(V, Quadratic):
        if not V.is_convex:
            raise NotConvex("indefinite quadratic")
        return 0.5 * cp.quad_form(z, cp.psd_wrap(V.P)) + V.q @ z + V.c, []
    if isinstance(V, Affine):
        return V.q @ z + V.c, []
    if isinstance(V, ScaledNorm):
        return V.weight * cp.norm(z, V.p), []
    if isinstance(V, MaxOf):
        exprs, cons = zip(*[_cvx_expr(p, z) for p in V.pieces])
        e = exprs[0] if len(exprs) == 1 else cp.maximum(*exprs)
        return e, [c for cs in cons for c in cs]
    if isinstance(V, MinOf):
        if not V.is_convex:
            raise NotConvex("minimum of several pieces")
        return _cvx_expr(V.pieces[0], z)
    if isinstance(V, PlusIndicator):
        e, cons = _cvx_expr(V.base, z)
        return e, cons + geo.cvx_constraints(V.set, z)
    if isinstance(V, Envelope):
        u = cp.Variable(V.dim)
        e, cons = _cvx_expr(V.base, u)
        return e + cp.sum_squares(z - u) / V.delta, cons
    raise UnsupportedVariant(type(V).__name__)


def infimum(V: FunctionSpec) -> float:
    """inf of V over R^n for convex catalog members (-inf if unbounded below)."""
    if not V.is_convex:
        raise NotConvex("infimum only for convex members")
    if isinstance(V, Quadratic):
        sol, *_ = np.linalg.lstsq(V.P, -V.q, rcond=None)
        if np.linalg.norm(V.P @ sol + V.q) > 1e-9 * (1 + np.linalg.norm(V.q)):
            return -np.inf
        return V.value(sol)
    if isinstance(V, Affine):
        return V.c if np.allclose(V.q, 0) else -np.inf
    if isinstance(V, ScaledNorm):
        return 0.0
    if isinstance(V, Envelope):
        return infimum(V.base)
    if isinstance(V, PlusIndicator) and isinstance(V.base, Affine) and np.allclose(V.base.q, 0):
        return V.base.c
    import cvxpy as cp

    z = cp.Variable(V.dim)
    e, cons = _cvx_expr(V, z)
    prob = cp.Problem(cp.Minimize(e), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status in ("unbounded", "unbounded_inaccurate"):
        return -np.inf
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NonConvergence(f"infimum solve: {prob.status}")
    return float(prob.value)


def prox_point(V: FunctionSpec, delta: float, y) -> np.ndarray:
    """Unique minimizer of V(z) + ||y - z||^2 / delta for convex V."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not V.is_convex:
        raise NotConvex("prox requires a convex function")
    y = geo.as_vector(y, V.dim)
    tau = delta / 2.0  # equivalent standard prox parameter
    if isinstance(V, Quadratic):
        return np.linalg.solve(V.P + np.eye(V.dim) / tau, y / tau - V.q)
    if isinstance(V, Affine):
        return y - tau * V.q
    if isinstance(V, ScaledNorm):
        t = tau * V.weight
        if V.p == 1:
            return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)
        ny = np.linalg.norm(y)
        return np.zeros_like(y) if ny <= t else (1 - t / ny) * y
    if isinstance(V, MinOf):
        return prox_point(V.pieces[0], delta, y)
    if isinstance(V, PlusIndicator) and isinstance(V.base, Affine) and np.allclose(V.base.q, 0):
        return geo.project(V.set, y)
    if isinstance(V, Envelope):
        p = prox_point(V.base, V.delta + delta, y)
        return y + (delta / (delta + V.delta)) * (p - y)
    import cvxpy as cp

    z = cp.Variable(V.dim)
    e, cons = _cvx_expr(V, z)
    prob = cp.Problem(cp.Minimize(e + cp.sum_squares(y - z) / delta), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NonConvergence(f"prox solve: {prob.status}")
    z = np.array(z.value, dtype=float)
    if isinstance(V, MaxOf):
        z = _polish_max_prox(V, delta, y, z)
    if isinstance(V, PlusIndicator):
        z = geo.project(V.set, z)
        if isinstance(V.base, (Quadratic, Affine)):
            z = _polish_qp_prox(V, delta, y, z)
    return z


def _polish_qp_prox(V, delta, y, z):
    """Exact KKT solve on the active rows when V is a quadratic plus a polyhedral indicator."""
    Gh = geo._halfspaces(V.set)
    if Gh is None:
        return z
    G, h = Gh
    act = set(np.flatnonzero(G @ z >= h - 1e-6 * (1 + np.abs(h))).tolist())
    H = _piece_hessian(V.base) + 2.0 / delta * np.eye(V.dim)
    g = V.base.q - 2.0 / delta * y
    # small primal-dual active-set loop seeded by the conic solution
    for _ in range(2 * len(h) + 2):
        idx = sorted(act)
        Ga = G[idx]
        K = np.block([[H, Ga.T], [Ga, np.zeros((len(idx), len(idx)))]])
        sol = np.linalg.lstsq(K, np.concatenate([-g, h[idx]]), rcond=None)[0]
        zz, mu = sol[:V.dim], sol[V.dim:]
        if mu.size and mu.min() < -1e-12:
            act.discard(idx[int(np.argmin(mu))])
            continue
        viol = G @ zz - h
        if viol.max(initial=-np.inf) > 1e-12 * (1 + np.abs(h).max()):
            act.add(int(np.argmax(viol)))
            continue
        return zz
    return z


def _piece_hessian(p):
    return p.P if isinstance(p, Quadratic) else np.zeros((p.dim, p.dim))


def _polish_max_prox(V, delta, y, z, iters=20):
    """Newton on the KKT system of the active pieces, started from the conic solution.

    Unknowns (z, lam, t): 2(z - y)/delta + sum lam_j grad p_j(z) = 0, p_j(z) = t, sum lam_j = 1.
    The refined point is kept only if it is dual feasible and no inactive piece exceeds t.
    """
    vals = V.piece_values(z)
    J = [j for j, v in enumerate(vals) if v >= vals.max() - 1e-6]
    pieces = [V.pieces[j] for j in J]
    n, k = V.dim, len(J)
    G = np.array([p.gradient(z) for p in pieces])
    A = np.vstack([G.T, np.ones((1, k))])
    rhs = np.concatenate([-2.0 * (z - y) / delta, [1.0]])
    lam = np.linalg.lstsq(A, rhs, rcond=None)[0]
    x = np.concatenate([z, lam, [vals.max()]])
    for _ in range(iters):
        zz, lam, t = x[:n], x[n:n + k], x[-1]
        G = np.array([p.gradient(zz) for p in pieces])
        F = np.concatenate([2.0 * (zz - y) / delta + G.T @ lam,
                            [p.value(zz) - t for p in pieces], [lam.sum() - 1.0]])
        if np.linalg.norm(F) < 1e-14:
            break
        H = 2.0 / delta * np.eye(n) + sum(l * _piece_hessian(p) for l, p in zip(lam, pieces))
        Jac = np.zeros((n + k + 1, n + k + 1))
        Jac[:n, :n] = H
        Jac[:n, n:n + k] = G.T
        Jac[n:n + k, :n] = G
        Jac[n:n + k, -1] = -1.0
        Jac[-1, n:n + k] = 1.0
        x = x - np.linalg.lstsq(Jac, F, rcond=None)[0]
    zz, lam, t = x[:n], x[n:n + k], x[-1]
    if not np.all(np.isfinite(x)) or lam.min() < -1e-10 or V.value(zz) > t + 1e-12:
        return z
    return zz


def prox_residual(V: FunctionSpec, delta: float, y, z, tol: float = 1e-7) -> float:
    """Distance from 2(y - z)/delta to the subdifferential of V at z."""
    y = geo.as_vector(y, V.dim)
    z = geo.as_vector(z, V.dim)
    D = subdifferential(V, z, SubdiffKind.PROXIMAL, tol)
    return geo.distance(D, 2.0 * (y - z) / delta)


def moreau_envelope(V: FunctionSpec, delta: float) -> Envelope:
    if not V.is_convex:
        raise NotConvex("envelope of a nonconvex function")
    return Envelope(V, delta)


def regularize_W(W: FunctionSpec, k: int) -> Envelope:
    """k-th member W_k = Envelope(W, 1/k) of the increasing Lipschitz approximation of W."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if not W.is_convex:
        raise NotConvex("regularize_W needs a convex W")
    if infimum(W) < -1e-12:
        raise NotNonnegative("W must be nonnegative")
    return Envelope(W, 1.0 / k)
