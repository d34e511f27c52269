"""Closed convex sets in R^n with exact projection, cone and LP calculus.

Every set is an immutable tagged-union member.  Points are 1-D float arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, lsq_linear, nnls

from .errors import (
    DimensionMismatch,
    EmptySetError,
    NonConvergence,
    PointNotInSet,
    Unbounded,
    UnsupportedVariant,
)

MEMBER_TOL = 1e-9
EPS_CONE = 1e-9
DYKSTRA_MAX_ITER = 10_000
DYKSTRA_TOL = 1e-10


def as_vector(x, dim=None) -> np.ndarray:
    if type(x) is np.ndarray and x.ndim == 1 and x.dtype == np.float64:
        v = x.copy()
    else:
        v = np.array(x, dtype=float).reshape(-1)
    if not np.isfinite(v).all():
        raise ValueError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_dim(S: "ConvexSet", x) -> np.ndarray:
    return as_vector(x, S.dim)


class ConvexSet:
    """Base class of the set catalog."""

    dim: int

    def contains(self, x, tol: float = MEMBER_TOL) -> bool:
        raise NotImplementedError

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _normal_generators(self, x: np.ndarray, tol: float) -> list:
        raise UnsupportedVariant(f"normal cone of {type(self).__name__}")

    def __contains__(self, x) -> bool:
        return self.contains(x)


@dataclass(frozen=True, eq=False)
class WholeSpace(ConvexSet):
    dim: int

    def contains(self, x, tol=MEMBER_TOL):
        _check_dim(self, x)
        return True

    def _project(self, x):
        return x.copy()

    def _normal_generators(self, x, tol):
        return []


@dataclass(frozen=True, eq=False)
class Singleton(ConvexSet):
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _frozen(as_vector(self.point)))

    @property
    def dim(self):
        return self.point.size

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return float(np.linalg.norm(x - self.point)) <= tol

    def _project(self, x):
        return self.point.copy()

    def _normal_generators(self, x, tol):
        eye = np.eye(self.dim)
        return list(eye) + list(-eye)


@dataclass(frozen=True, eq=False)
class Polyhedron(ConvexSet):
    """The set {x : G x <= h}."""

    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        G = np.atleast_2d(np.array(self.G, dtype=float))
        h = as_vector(self.h)
        if G.shape[0] != h.size:
            raise DimensionMismatch("G and h row counts differ")
        if not np.all(np.isfinite(G)):
            raise ValueError("G must be finite")
        object.__setattr__(self, "G", _frozen(G))
        object.__setattr__(self, "h", _frozen(h))
        object.__setattr__(self, "_norms", _frozen(np.linalg.norm(G, axis=1)))
        if _lp_feasible_point(G, h) is None:
            raise EmptySetError("polyhedron is empty")

    @property
    def dim(self):
        return self.G.shape[1]

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return bool((self.G @ x - self.h <= tol * np.maximum(self._norms, 1e-300)).all())

    def _project(self, x):
        return _ldp_project(self.G, self.h, x)

    def _normal_generators(self, x, tol):
        norms = self._norms
        slack = self.G @ x - self.h
        active = (norms > 0) & (slack >= -tol * norms)
        return [g.copy() for g in self.G[active]]


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_vector(self.center)))
        r = float(self.radius)
        if not np.isfinite(r) or r < 0:
            raise ValueError("radius must be finite and nonnegative")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return self.center.size

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol

    def _project(self, x):
        d = x - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / nd)

    def _normal_generators(self, x, tol):
        if self.radius == 0:
            eye = np.eye(self.dim)
            return list(eye) + list(-eye)
        d = x - self.center
        nd = np.linalg.norm(d)
        if nd >= self.radius - tol:
            return [d / nd]
        return []


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_vector(self.lo), as_vector(self.hi)
        if lo.size != hi.size:
            raise DimensionMismatch("lo and hi differ in length")
        if np.any(lo > hi):
            raise EmptySetError("box needs lo <= hi")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self):
        return self.lo.size

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def _project(self, x):
        return np.clip(x, self.lo, self.hi)

    def _normal_generators(self, x, tol):
        gens = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            if x[i] - self.lo[i] <= tol:
                gens.append(-e)
            if self.hi[i] - x[i] <= tol:
                gens.append(e)
        return gens


@dataclass(frozen=True, eq=False)
class PolyhedralCone(ConvexSet):
    """apex + cone(generators); apex defaults to the origin."""

    generators: np.ndarray
    apex: np.ndarray = None

    def __post_init__(self):
        gens = np.array(self.generators, dtype=float)
        if self.apex is None:
            if gens.ndim != 2:
                raise ValueError("generators must be a 2-D array when apex is omitted")
            apex = np.zeros(gens.shape[1])
        else:
            apex = as_vector(self.apex)
        gens = gens.reshape(-1, apex.size)
        object.__setattr__(self, "generators", _frozen(gens))
        object.__setattr__(self, "apex", _frozen(apex))

    @property
    def dim(self):
        return self.apex.size

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return float(np.linalg.norm(self._project(x) - x)) <= tol * (1 + np.linalg.norm(x))

    def _project(self, x):
        if self.generators.shape[0] == 0:
            return self.apex.copy()
        beta = _nnls(self.generators.T, x - self.apex)
        return self.apex + self.generators.T @ beta


@dataclass(frozen=True, eq=False)
class Hull(ConvexSet):
    """conv(points) + cone(rays)."""

    points: np.ndarray
    rays: np.ndarray = None

    def __post_init__(self):
        pts = np.atleast_2d(np.array(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise EmptySetError("hull needs at least one point")
        n = pts.shape[1]
        rays = np.zeros((0, n)) if self.rays is None else np.array(self.rays, dtype=float).reshape(-1, n)
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "rays", _frozen(rays))

    @property
    def dim(self):
        return self.points.shape[1]

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return float(np.linalg.norm(self._project(x) - x)) <= tol * (1 + np.linalg.norm(x))

    def _project(self, x):
        return _hull_project(self.points, self.rays, x)


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSet):
    sets: tuple

    def __post_init__(self):
        sets = tuple(self.sets)
        if not sets:
            raise ValueError("intersection of nothing")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise DimensionMismatch("intersection parts differ in dimension")
        object.__setattr__(self, "sets", sets)
        hrep = _halfspaces(self)
        if hrep is not None:
            if _lp_feasible_point(*hrep) is None:
                raise EmptySetError("intersection is empty")
        else:
            try:
                p = _dykstra(sets, np.zeros(self.dim))
            except NonConvergence:
                p = None
            if p is None or not all(s.contains(p, 1e-7) for s in sets):
                raise EmptySetError("intersection is empty (feasibility probe failed)")

    @property
    def dim(self):
        return self.sets[0].dim

    def contains(self, x, tol=MEMBER_TOL):
        return all(s.contains(x, tol) for s in self.sets)

    def _project(self, x):
        return _dykstra(self.sets, x)

    def _normal_generators(self, x, tol):
        out = []
        for s in self.sets:
            out.extend(s._normal_generators(x, tol))
        return out


@dataclass(frozen=True, eq=False)
class Product(ConvexSet):
    """Cartesian product of sets acting on consecutive coordinate blocks."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)

    def split(self, x):
        out, i = [], 0
        for p in self.parts:
            out.append(x[i:i + p.dim])
            i += p.dim
        return out

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self, x)
        return all(p.contains(xi, tol) for p, xi in zip(self.parts, self.split(x)))

    def _project(self, x):
        return np.concatenate([p._project(xi) for p, xi in zip(self.parts, self.split(x))])

    def _normal_generators(self, x, tol):
        out, offset = [], 0
        for p, xi in zip(self.parts, self.split(x)):
            for g in p._normal_generators(xi, tol):
                full = np.zeros(self.dim)
                full[offset:offset + p.dim] = g
                out.append(full)
            offset += p.dim
        return out


# ---------------------------------------------------------------------------
# helpers


def halfspace(g, h) -> Polyhedron:
    return Polyhedron(np.atleast_2d(as_vector(g)), [float(h)])


def nonneg_orthant(n: int) -> Polyhedron:
    return Polyhedron(-np.eye(n), np.zeros(n))


def _lp_feasible_point(G, h):
    n = G.shape[1]
    if G.shape[0] == 0:
        return np.zeros(n)
    res = linprog(np.zeros(n), A_ub=G, b_ub=h, bounds=[(None, None)] * n, method="highs")
    return res.x if res.status == 0 else None


def _nnls_kkt_ok(A, b, x, tol=1e-10):
    g = A.T @ (A @ x - b)
    scale = tol * (1 + np.abs(A).max() * (np.abs(b).max() + 1))
    return bool(np.all(x >= 0) and np.all(g >= -scale) and np.all(np.abs(g[x > 0]) <= scale))


def _nnls(A, b):
    """min ||A x - b|| over x >= 0, KKT-checked; bounded-variable least squares as fallback."""
    x, _ = nnls(A, b, maxiter=50 * max(A.shape))
    if _nnls_kkt_ok(A, b, x):
        return x
    x = lsq_linear(A, b, bounds=(0, np.inf), method="bvls", tol=1e-14).x
    return np.maximum(x, 0.0)


def _ldp_project(G, h, x):
    """Projection onto {z : Gz <= h} by least-distance programming (Lawson-Hanson)."""
    viol = G @ x - h
    if G.shape[0] == 0 or np.all(viol <= 0):
        return x.copy()
    n = x.size
    E = -G
    f = viol
    A = np.vstack([E.T, f[None, :]])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    lam = _nnls(A, b)
    r = A @ lam - b
    if abs(r[-1]) < 1e-14:
        raise EmptySetError("polyhedron is empty")
    u = -r[:n] / r[-1]
    return _polish_ldp(G, h, x, x + u)


def _polish_ldp(G, h, x, z):
    """Re-solve the projection as an equality problem on the active rows at z.

    Removes the rounding of the NNLS route, so e.g. boundary points come out exactly.
    """
    scale = np.linalg.norm(G, axis=1)
    act = np.flatnonzero(np.abs(G @ z - h) <= 1e-9 * np.maximum(scale, 1e-300) * (1 + np.abs(z).max()))
    if act.size == 0:
        return z
    Ga = G[act]
    mu = np.linalg.lstsq(Ga @ Ga.T, Ga @ x - h[act], rcond=None)[0]
    zz = x - Ga.T @ mu
    if mu.min() < -1e-12 or np.any(G @ zz - h > 1e-12 * np.maximum(scale, 1e-300)):
        return z
    # snap single active rows exactly onto their hyperplane
    for i in act:
        if np.count_nonzero(G[i]) == 1:
            j = int(np.flatnonzero(G[i])[0])
            zz[j] = h[i] / G[i, j]
    return zz


def _hull_project(points, rays, x):
    p, k = points.shape[0], rays.shape[0]
    S = np.vstack([points, rays]).T  # n x (p+k)
    w = 1e4 * (1.0 + np.abs(S).max() + np.abs(x).max())
    A = np.vstack([S, np.concatenate([np.full(p, w), np.zeros(k)])[None, :]])
    b = np.concatenate([x, [w]])
    coef = _nnls(A, b)
    # polish: equality-constrained least squares on the support
    supp = coef > 1e-12
    if supp[:p].any():
        Ssub = S[:, supp]
        c = np.concatenate([np.ones(p), np.zeros(k)])[supp]
        m = Ssub.shape[1]
        K = np.zeros((m + 1, m + 1))
        K[:m, :m] = Ssub.T @ Ssub
        K[:m, m] = c
        K[m, :m] = c
        rhs = np.concatenate([Ssub.T @ x, [1.0]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0][:m]
        if np.all(sol >= -1e-13):
            cand = Ssub @ np.maximum(sol, 0)
            a_sum = np.sum(np.maximum(sol, 0)[c > 0])
            if abs(a_sum - 1) < 1e-10 and np.linalg.norm(cand - x) <= np.linalg.norm(S @ coef - x) + 1e-12:
                return cand
    alpha = coef[:p] / coef[:p].sum()
    return points.T @ alpha + rays.T @ coef[p:]


def _dykstra(sets: Sequence[ConvexSet], x0, max_iter=DYKSTRA_MAX_ITER, tol=DYKSTRA_TOL):
    x = np.array(x0, dtype=float)
    incr = [np.zeros_like(x) for _ in sets]
    for _ in range(max_iter):
        change = 0.0
        for i, s in enumerate(sets):
            y = s._project(x + incr[i])
            new_incr = x + incr[i] - y
            change += float(np.sum((x - y) ** 2))
            incr[i] = new_incr
            x = y
        if change < tol**2:
            return x
    raise NonConvergence(f"Dykstra did not converge in {max_iter} iterations")


def _halfspaces(S: ConvexSet):
    """(G, h) with S = {Gx <= h}, or None if S is not given in H-form."""
    n = S.dim
    if isinstance(S, WholeSpace):
        return np.zeros((0, n)), np.zeros(0)
    if isinstance(S, Polyhedron):
        return np.array(S.G), np.array(S.h)
    if isinstance(S, Box):
        eye = np.eye(n)
        return np.vstack([eye, -eye]), np.concatenate([S.hi, -S.lo])
    if isinstance(S, Singleton):
        eye = np.eye(n)
        return np.vstack([eye, -eye]), np.concatenate([S.point, -S.point])
    if isinstance(S, Intersection):
        reps = [_halfspaces(s) for s in S.sets]
        if any(r is None for r in reps):
            return None
        return np.vstack([r[0] for r in reps]), np.concatenate([r[1] for r in reps])
    if isinstance(S, Product):
        reps = [_halfspaces(p) for p in S.parts]
        if any(r is None for r in reps):
            return None
        G = np.zeros((sum(r[0].shape[0] for r in reps), n))
        row = col = 0
        for (g, _), p in zip(reps, S.parts):
            G[row:row + g.shape[0], col:col + p.dim] = g
            row += g.shape[0]
            col += p.dim
        return G, np.concatenate([r[1] for r in reps])
    return None


# ---------------------------------------------------------------------------
# public operations


def membership(S: ConvexSet, x, tol: float = MEMBER_TOL) -> bool:
    return S.contains(x, tol)


def project(S: ConvexSet, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``S``."""
    x = _check_dim(S, x)
    return S._project(x)


def distance(S: ConvexSet, x) -> float:
    x = _check_dim(S, x)
    if isinstance(S, Singleton):
        return float(np.linalg.norm(x - S.point))
    # cone and hull membership is itself a projection, so skip the exact-membership shortcut
    if not isinstance(S, (PolyhedralCone, Hull)) and S.contains(x, 0.0):
        return 0.0
    return float(np.linalg.norm(x - S._project(x)))


def normal_generators(S: ConvexSet, x, tol: float = EPS_CONE) -> list:
    x = _check_dim(S, x)
    if not S.contains(x, max(tol, MEMBER_TOL)):
        raise PointNotInSet("normal cone requested at a point outside the set")
    gens = S._normal_generators(x, tol)
    out = []
    for g in gens:
        ng = np.linalg.norm(g)
        if ng == 0:
            continue
        u = g / ng
        if not any(np.allclose(u, v, atol=1e-12) for v in out):
            out.append(u)
    return out


def normal_cone(S: ConvexSet, x, tol: float = EPS_CONE) -> ConvexSet:
    """Normal cone of ``S`` at ``x`` as a PolyhedralCone, or {0} at interior points."""
    gens = normal_generators(S, x, tol)
    if not gens:
        return Singleton(np.zeros(S.dim))
    return PolyhedralCone(np.array(gens))


def tangent_cone_contains(S: ConvexSet, x, d, tol: float = EPS_CONE) -> bool:
    d = _check_dim(S, d)
    scale = max(1.0, float(np.linalg.norm(d)))
    return all(float(g @ d) <= tol * scale for g in normal_generators(S, x, tol))


def linear_minimize(c, S: ConvexSet):
    """Minimize <c, z> over S; returns ``(value, argmin)``.

    Ties go to the lexicographically smallest minimizer.  Raises Unbounded
    when the objective decreases along a recession direction.
    """
    c = _check_dim(S, c)
    z = _linmin(c, S)
    return float(c @ z), z


def _lex_tie(cands):
    cands = sorted(cands, key=lambda p: tuple(p))
    return np.array(cands[0], dtype=float)


def _linmin(c, S):
    n = S.dim
    cn = max(1.0, float(np.linalg.norm(c)))
    if isinstance(S, WholeSpace):
        if np.linalg.norm(c) > 1e-14:
            raise Unbounded("nonzero objective on the whole space")
        return np.zeros(n)
    if isinstance(S, Singleton):
        return S.point.copy()
    if isinstance(S, Box):
        return np.where(c < 0, S.hi, S.lo).astype(float)
    if isinstance(S, Ball):
        nc = np.linalg.norm(c)
        if nc == 0:
            e = np.zeros(n)
            e[0] = 1.0
            return S.center - S.radius * e
        return S.center - S.radius * c / nc
    if isinstance(S, PolyhedralCone):
        if any(float(c @ g) < -1e-12 * cn * max(1.0, np.linalg.norm(g)) for g in S.generators):
            raise Unbounded("objective decreases along a cone generator")
        return S.apex.copy()
    if isinstance(S, Hull):
        if any(float(c @ r) < -1e-12 * cn * max(1.0, np.linalg.norm(r)) for r in S.rays):
            raise Unbounded("objective decreases along a ray")
        vals = S.points @ c
        best = vals.min()
        tied = [p for p, v in zip(S.points, vals) if v <= best + 1e-12 * (1 + abs(best))]
        return _lex_tie(tied)
    if isinstance(S, Product):
        return np.concatenate([_linmin(ci, p) for p, ci in zip(S.parts, S.split(c))])
    hrep = _halfspaces(S)
    if hrep is not None:
        return _lp_lexmin(c, *hrep)
    return _cvx_linmin(c, S)


def _lp_lexmin(c, G, h):
    n = c.size
    bounds = [(None, None)] * n
    res = linprog(c, A_ub=G, b_ub=h, bounds=bounds, method="highs")
    if res.status == 3:
        raise Unbounded("LP unbounded")
    if res.status != 0:
        raise NonConvergence(f"LP failed: {res.message}")
    val = float(res.fun)
    A = np.vstack([G, c[None, :]])
    b = np.concatenate([h, [val + 1e-9 * (1 + abs(val))]])
    x = res.x
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        r = linprog(e, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if r.status != 0:
            break  # lexicographic refinement unbounded in this coordinate
        x = r.x
        A = np.vstack([A, e[None, :]])
        b = np.concatenate([b, [r.x[i] + 1e-9 * (1 + abs(r.x[i]))]])
    return x


def _cvx_linmin(c, S):
    import cvxpy as cp

    z = cp.Variable(S.dim)
    prob = cp.Problem(cp.Minimize(c @ z), cvx_constraints(S, z))
    prob.solve(solver=cp.CLARABEL)
    if prob.status in ("unbounded", "unbounded_inaccurate"):
        raise Unbounded("conic program unbounded")
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NonConvergence(f"conic solve failed: {prob.status}")
    return np.array(z.value, dtype=float)


def support(S: ConvexSet, d) -> float:
    """sup over s in S of <s, d>; +inf when unbounded."""
    try:
        val, _ = linear_minimize(-as_vector(d), S)
    except Unbounded:
        return np.inf
    return -val


def recession_cone(S: ConvexSet) -> ConvexSet:
    n = S.dim
    if isinstance(S, Polyhedron):
        return Polyhedron(S.G, np.zeros_like(S.h))
    if isinstance(S, (Box, Ball, Singleton)):
        return Singleton(np.zeros(n))
    if isinstance(S, WholeSpace):
        return WholeSpace(n)
    if isinstance(S, PolyhedralCone):
        return PolyhedralCone(S.generators, np.zeros(n))
    if isinstance(S, Hull):
        return PolyhedralCone(S.rays, np.zeros(n)) if len(S.rays) else Singleton(np.zeros(n))
    if isinstance(S, Product):
        return Product([recession_cone(p) for p in S.parts])
    raise UnsupportedVariant(f"recession cone of {type(S).__name__}")


def polar(S: ConvexSet) -> ConvexSet:
    """Polar set {y : <y, v> <= 1 for all v in S} for the supported variants."""
    n = S.dim
    if isinstance(S, Ball):
        if np.any(S.center != 0):
            raise UnsupportedVariant("polar of an off-center ball")
        return WholeSpace(n) if S.radius == 0 else Ball(np.zeros(n), 1.0 / S.radius)
    if isinstance(S, PolyhedralCone):
        if np.any(S.apex != 0):
            raise UnsupportedVariant("polar of a shifted cone")
        if len(S.generators) == 0:
            return WholeSpace(n)
        return Polyhedron(S.generators, np.zeros(len(S.generators)))
    if isinstance(S, Hull):
        G = np.vstack([S.points, S.rays])
        h = np.concatenate([np.ones(len(S.points)), np.zeros(len(S.rays))])
        return Polyhedron(G, h)
    if isinstance(S, Polyhedron) and np.all(S.h == 0):
        return PolyhedralCone(S.G)
    if isinstance(S, WholeSpace):
        return Singleton(np.zeros(n))
    if isinstance(S, Singleton) and np.all(S.point == 0):
        return WholeSpace(n)
    raise UnsupportedVariant(f"polar of {type(S).__name__}")


def depth(S: ConvexSet, x) -> float:
    """Radius of the largest ball around ``x`` inside ``S`` (negative outside)."""
    x = _check_dim(S, x)
    if isinstance(S, WholeSpace):
        return np.inf
    if isinstance(S, Singleton):
        return -float(np.linalg.norm(x - S.point)) if S.dim else np.inf
    if isinstance(S, Polyhedron):
        norms = np.linalg.norm(S.G, axis=1)
        keep = norms > 0
        if not keep.any():
            return np.inf
        return float(np.min((S.h[keep] - S.G[keep] @ x) / norms[keep]))
    if isinstance(S, Box):
        return float(min(np.min(x - S.lo), np.min(S.hi - x)))
    if isinstance(S, Ball):
        return S.radius - float(np.linalg.norm(x - S.center))
    if isinstance(S, Intersection):
        return min(depth(s, x) for s in S.sets)
    if isinstance(S, Product):
        return min(depth(p, xi) for p, xi in zip(S.parts, S.split(x)))
    raise UnsupportedVariant(f"depth in {type(S).__name__}")


def in_interior(S: ConvexSet, x, tol: float = MEMBER_TOL) -> bool:
    return depth(S, x) > tol


def has_interior(S: ConvexSet) -> bool:
    if isinstance(S, WholeSpace):
        return True
    if isinstance(S, Singleton):
        return S.dim == 0
    if isinstance(S, Ball):
        return S.radius > 0
    if isinstance(S, Box):
        return bool(np.all(S.hi > S.lo))
    if isinstance(S, Product):
        return all(has_interior(p) for p in S.parts)
    hrep = _halfspaces(S)
    if hrep is not None:
        return _chebyshev_radius(*hrep) > MEMBER_TOL
    return _cvx_chebyshev(S) > MEMBER_TOL


def _chebyshev_radius(G, h):
    n = G.shape[1]
    norms = np.linalg.norm(G, axis=1)
    A = np.hstack([G, norms[:, None]])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * n + [(0, 1.0)]
    res = linprog(c, A_ub=A, b_ub=h, bounds=bounds, method="highs")
    return float(res.x[-1]) if res.status == 0 else 0.0


def _cvx_chebyshev(S):
    import cvxpy as cp

    z, t = cp.Variable(S.dim), cp.Variable()
    cons = [t <= 1.0, t >= 0]
    for part in (S.sets if isinstance(S, Intersection) else (S,)):
        if isinstance(part, Ball):
            cons.append(cp.norm(z - part.center) + t <= part.radius)
        else:
            hrep = _halfspaces(part)
            if hrep is None:
                raise UnsupportedVariant(f"interior test for {type(part).__name__}")
            G, h = hrep
            cons.append(G @ z + t * np.linalg.norm(G, axis=1) <= h)
    prob = cp.Problem(cp.Maximize(t), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(t.value) if prob.status == "optimal" else 0.0


def bounding_box(S: ConvexSet):
    """Axis-aligned box (lo, hi) containing S; raises Unbounded if none exists."""
    n = S.dim
    if isinstance(S, Box):
        return np.array(S.lo), np.array(S.hi)
    if isinstance(S, Ball):
        return S.center - S.radius, S.center + S.radius
    if isinstance(S, Singleton):
        return np.array(S.point), np.array(S.point)
    if isinstance(S, Hull) and len(S.rays) == 0:
        return S.points.min(axis=0), S.points.max(axis=0)
    if isinstance(S, Product):
        boxes = [bounding_box(p) for p in S.parts]
        return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])
    if isinstance(S, Intersection):
        lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
        for s in S.sets:
            try:
                l, u = bounding_box(s)
            except Unbounded:
                continue
            lo, hi = np.maximum(lo, l), np.minimum(hi, u)
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            return lo, hi
        hrep = _halfspaces(S)
        if hrep is None:
            raise Unbounded("cannot bound intersection")
    lo, hi = np.empty(n), np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        lo[i] = linear_minimize(e, S)[0]
        hi[i] = -linear_minimize(-e, S)[0]
    return lo, hi


# ---------------------------------------------------------------------------
# conic-modelling builders (cvxpy), used by generic saddle and prox solves


def cvx_constraints(S: ConvexSet, z) -> list:
    """cvxpy constraints expressing ``z in S``."""
    import cvxpy as cp

    if isinstance(S, WholeSpace):
        return []
    if isinstance(S, Singleton):
        return [z == S.point]
    if isinstance(S, Polyhedron):
        return [S.G @ z <= S.h]
    if isinstance(S, Box):
        return [z >= S.lo, z <= S.hi]
    if isinstance(S, Ball):
        return [cp.norm(z - S.center) <= S.radius]
    if isinstance(S, PolyhedralCone):
        if len(S.generators) == 0:
            return [z == S.apex]
        beta = cp.Variable(len(S.generators), nonneg=True)
        return [z == S.apex + S.generators.T @ beta]
    if isinstance(S, Hull):
        alpha = cp.Variable(len(S.points), nonneg=True)
        expr = S.points.T @ alpha
        cons = [cp.sum(alpha) == 1]
        if len(S.rays):
            beta = cp.Variable(len(S.rays), nonneg=True)
            expr = expr + S.rays.T @ beta
        return cons + [z == expr]
    if isinstance(S, Intersection):
        return [c for s in S.sets for c in cvx_constraints(s, z)]
    if isinstance(S, Product):
        out, i = [], 0
        for p in S.parts:
            out += cvx_constraints(p, z[i:i + p.dim])
            i += p.dim
        return out
    raise UnsupportedVariant(type(S).__name__)


def cvx_support(S: ConvexSet, xi):
    """(expr, constraints) with expr convex and equal to the support function at ``xi``."""
    import cvxpy as cp

    if isinstance(S, WholeSpace):
        return cp.Constant(0.0), [xi == 0]
    if isinstance(S, Singleton):
        return S.point @ xi, []
    if isinstance(S, Polyhedron):
        mu = cp.Variable(len(S.h), nonneg=True)
        return S.h @ mu, [S.G.T @ mu == xi]
    if isinstance(S, Box):
        mid, half = (S.lo + S.hi) / 2, (S.hi - S.lo) / 2
        return mid @ xi + half @ cp.abs(xi), []
    if isinstance(S, Ball):
        return S.center @ xi + S.radius * cp.norm(xi), []
    if isinstance(S, PolyhedralCone):
        cons = [S.generators @ xi <= 0] if len(S.generators) else []
        return S.apex @ xi, cons
    if isinstance(S, Hull):
        cons = [S.rays @ xi <= 0] if len(S.rays) else []
        return cp.max(S.points @ xi), cons
    if isinstance(S, Product):
        exprs, cons, i = [], [], 0
        for p in S.parts:
            e, c = cvx_support(p, xi[i:i + p.dim])
            exprs.append(e)
            cons += c
            i += p.dim
        return cp.sum(cp.hstack(exprs)), cons
    if isinstance(S, Intersection):
        parts = [cp.Variable(S.dim) for _ in S.sets]
        exprs, cons = [], [xi == sum(parts)]
        for s, v in zip(S.sets, parts):
            e, c = cvx_support(s, v)
            exprs.append(e)
            cons += c
        return cp.sum(cp.hstack(exprs)), cons
    raise UnsupportedVariant(type(S).__name__)


def quasi_random_points(S: ConvexSet, n: int, seed: int = 0, accept=None,
                        max_rounds: int = 50) -> np.ndarray:
    """Up to ``n`` scrambled-Halton points of the bounding box of S that lie in S.

    ``accept`` is an optional extra predicate on points.
    """
    from scipy.stats import qmc

    lo, hi = bounding_box(S)
    sampler = qmc.Halton(d=S.dim, scramble=True, seed=seed)
    out = []
    for _ in range(max_rounds):
        batch = qmc.scale(sampler.random(max(2 * n, 16)), lo, hi) if np.all(hi > lo) else \
            lo + (hi - lo) * sampler.random(max(2 * n, 16))
        for p in batch:
            if S.contains(p) and (accept is None or accept(p)):
                out.append(p)
                if len(out) == n:
                    return np.array(out)
    return np.array(out).reshape(-1, S.dim)
