"""Maximally monotone operators with set-valued evaluation and resolvents."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functions as fn
from . import geometry as geo
from .errors import NotConvex, NotMonotone, NslyapError, OutsideDomain, SolverFailure

RESOLVENT_TOL = 1e-9
RESOLVENT_MAX_ITER = 10_000


class MonotoneOperator:
    dim: int

    @property
    def domain(self) -> geo.ConvexSet:
        return geo.WholeSpace(self.dim)


@dataclass(frozen=True, eq=False)
class Zero(MonotoneOperator):
    dim: int


@dataclass(frozen=True, eq=False)
class Linear(MonotoneOperator):
    """y -> M y with M + M' positive semidefinite."""

    M: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.array(self.M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError("M must be square")
        if np.linalg.eigvalsh(M + M.T).min() < -1e-10:
            raise NotMonotone("M + M' is not positive semidefinite")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @property
    def dim(self):
        return self.M.shape[0]


@dataclass(frozen=True, eq=False)
class NormalConeOf(MonotoneOperator):
    C: geo.ConvexSet

    @property
    def dim(self):
        return self.C.dim

    @property
    def domain(self):
        return self.C


@dataclass(frozen=True, eq=False)
class SubdiffOf(MonotoneOperator):
    phi: fn.FunctionSpec

    def __post_init__(self):
        if not self.phi.is_convex:
            raise NotConvex("subdifferential operator needs a convex function")

    @property
    def dim(self):
        return self.phi.dim

    @property
    def domain(self):
        return self.phi.domain


def _smooth(phi):
    return isinstance(phi, (fn.Quadratic, fn.Affine, fn.Envelope))


@dataclass(frozen=True, eq=False)
class Sum(MonotoneOperator):
    """Single-valued part (Linear or gradient of a smooth convex function) plus a normal cone."""

    single: MonotoneOperator
    cone: NormalConeOf

    def __post_init__(self):
        if isinstance(self.single, SubdiffOf):
            if not _smooth(self.single.phi):
                raise ValueError("Sum needs a smooth SubdiffOf part")
        elif not isinstance(self.single, (Linear, Zero)):
            raise TypeError("Sum single part must be Zero, Linear or smooth SubdiffOf")
        if not isinstance(self.cone, NormalConeOf):
            raise TypeError("Sum cone part must be NormalConeOf")

    @property
    def dim(self):
        return self.cone.dim

    @property
    def domain(self):
        return self.cone.C

    def single_value(self, y):
        return _single(self.single, y)

    def single_lipschitz(self):
        s = self.single
        if isinstance(s, Zero):
            return 0.0
        if isinstance(s, Linear):
            return float(np.linalg.norm(s.M, 2))
        phi = s.phi
        if isinstance(phi, fn.Quadratic):
            return float(np.linalg.norm(phi.P, 2))
        if isinstance(phi, fn.Affine):
            return 0.0
        return 2.0 / phi.delta


@dataclass(frozen=True, eq=False)
class ProductOperator(MonotoneOperator):
    """Block-diagonal operator acting on consecutive coordinate blocks."""

    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def dim(self):
        return sum(b.dim for b in self.blocks)

    @property
    def domain(self):
        return geo.Product([b.domain for b in self.blocks])

    def split(self, x):
        out, i = [], 0
        for b in self.blocks:
            out.append(x[i:i + b.dim])
            i += b.dim
        return out


def _single(op, y):
    if isinstance(op, Zero):
        return np.zeros(op.dim)
    if isinstance(op, Linear):
        return op.M @ y
    return op.phi.gradient(y)


def _check_domain(A, y, tol=geo.MEMBER_TOL):
    y = geo.as_vector(y, A.dim)
    if not A.domain.contains(y, tol):
        raise OutsideDomain("point outside the operator domain")
    return y


def evaluate(A: MonotoneOperator, y, tol: float = geo.EPS_CONE) -> geo.ConvexSet:
    """The closed convex set A y."""
    y = _check_domain(A, y, max(tol, geo.MEMBER_TOL))
    return _evaluate(A, y, tol)


def _evaluate(A, y, tol):
    n = A.dim
    if isinstance(A, (Zero, Linear)):
        return geo.Singleton(_single(A, y))
    if isinstance(A, NormalConeOf):
        return geo.normal_cone(A.C, y, tol)
    if isinstance(A, SubdiffOf):
        return fn.subdifferential(A.phi, y, fn.SubdiffKind.PROXIMAL, tol)
    if isinstance(A, Sum):
        s = _single(A.single, y)
        gens = geo.normal_generators(A.cone.C, y, tol)
        if not gens:
            return geo.Singleton(s)
        return geo.PolyhedralCone(np.array(gens), s)
    if isinstance(A, ProductOperator):
        return geo.Product([_evaluate(b, yi, tol) for b, yi in zip(A.blocks, A.split(y))])
    raise TypeError(type(A).__name__)


def resolvent(A: MonotoneOperator, lam: float, z) -> np.ndarray:
    """J_lam(z) = (I + lam A)^{-1} z."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    z = geo.as_vector(z, A.dim)
    return _resolvent(A, lam, z)


def _resolvent(A, lam, z):
    if isinstance(A, Zero):
        return z.copy()
    if isinstance(A, Linear):
        return np.linalg.solve(np.eye(A.dim) + lam * A.M, z)
    if isinstance(A, NormalConeOf):
        return geo.project(A.C, z)
    if isinstance(A, SubdiffOf):
        return fn.prox_point(A.phi, 2.0 * lam, z)
    if isinstance(A, Sum):
        return _sum_resolvent(A, lam, z)
    if isinstance(A, ProductOperator):
        return np.concatenate([_resolvent(b, lam, zi) for b, zi in zip(A.blocks, A.split(z))])
    raise TypeError(type(A).__name__)


def _sum_resolvent_lcp(A, lam, z):
    """Linear part over a polyhedron: KKT of x + lam M x + G'mu = z is a monotone LCP in mu."""
    from .lcs import solve_lcp

    rep = geo._halfspaces(A.cone.C)
    if rep is None or not isinstance(A.single, (Linear, Zero)):
        return None
    G, h = rep
    n = A.dim
    B = np.eye(n) + (lam * A.single.M if isinstance(A.single, Linear) else 0.0)
    x0 = np.linalg.solve(B, z)
    if G.shape[0] == 0:
        return x0
    BiGt = np.linalg.solve(B, G.T)
    try:
        sol = solve_lcp(G @ BiGt, h - G @ x0)
    except NslyapError:
        return None
    return x0 - BiGt @ sol.u


def _sum_resolvent(A, lam, z):
    x = _sum_resolvent_lcp(A, lam, z)
    if x is not None:
        x = geo.project(A.cone.C, x)
        if natural_residual(A, lam, z, x) <= RESOLVENT_TOL * (1 + np.linalg.norm(z)):
            return x
    # solve x = P_C(x - tau (x + lam s(x) - z)), a contraction for tau = 1/L^2
    C = A.cone.C
    L = 1.0 + lam * A.single_lipschitz()
    tau = 1.0 / L**2
    x = geo.project(C, z)
    res = np.inf
    for _ in range(RESOLVENT_MAX_ITER):
        x_new = geo.project(C, x - tau * (x + lam * _single(A.single, x) - z))
        step = np.linalg.norm(x_new - x)
        x = x_new
        if step <= 1e-3 * RESOLVENT_TOL * (1 + np.linalg.norm(z)):
            res = natural_residual(A, lam, z, x)
            if res <= RESOLVENT_TOL * (1 + np.linalg.norm(z)):
                return x
    raise SolverFailure("Sum resolvent did not converge", residual=float(res))


def natural_residual(A, lam, z, x) -> float:
    """||x - P_C(z - lam s(x))|| for a Sum operator; zero exactly at the resolvent."""
    return float(np.linalg.norm(x - geo.project(A.cone.C, z - lam * _single(A.single, x))))


def inclusion_residual(A: MonotoneOperator, lam: float, z, x, tol: float = 1e-8) -> float:
    """distance((z - x)/lam, A x), the defect of z - x in lam A x."""
    x = geo.as_vector(x, A.dim)
    z = geo.as_vector(z, A.dim)
    Ax = evaluate(A, x, tol)
    return geo.distance(Ax, (z - x) / lam)


def _cone_distance(gens, v):
    if not len(gens):
        return float(np.linalg.norm(v))
    if len(gens) == 1:
        g = gens[0]
        t = max(0.0, float(g @ v) / float(g @ g))
        return float(np.linalg.norm(v - t * g))
    return geo.distance(geo.PolyhedralCone(np.array(gens)), v)


def _inclusion_residual(A, lam, z, x, tol=1e-8):
    # unchecked variant for the stepping loop, where x comes from the resolvent;
    # cone distances ignore generator scaling, so raw generators are used
    v = (z - x) / lam
    if isinstance(A, NormalConeOf):
        return _cone_distance(A.C._normal_generators(x, tol), v)
    if isinstance(A, Sum):
        return _cone_distance(A.cone.C._normal_generators(x, tol), v - _single(A.single, x))
    return geo.distance(_evaluate(A, x, tol), v)


def minimal_section(A: MonotoneOperator, y) -> np.ndarray:
    """Least-norm element of A y."""
    Ay = evaluate(A, y)
    return geo.project(Ay, np.zeros(A.dim))


def project_onto_value(A: MonotoneOperator, y, w) -> np.ndarray:
    Ay = evaluate(A, y)
    return geo.project(Ay, geo.as_vector(w, A.dim))


def yosida(A: MonotoneOperator, lam: float, x) -> np.ndarray:
    x = geo.as_vector(x, A.dim)
    return (x - resolvent(A, lam, x)) / lam
