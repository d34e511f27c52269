"""Invariance of closed convex sets under x' in f(x) - A x.

Pointwise tests live on K = S ∩ cl(Dom A):

    tangent      f(y) - proj_{Ay} f(y) lies in T_K(y)
    normal       sup over unit normals xi of <xi, d> <= 0, with d the
                 minimal-section direction ("min-section") or the inner
                 minimum over Ay ("set-min")
    convexified  some v in Ay has f(y) - v in T_K(y)

and are compared with the distance of simulated trajectories to S.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from . import integrator as itg
from . import lyapunov as ly
from . import operators as ops
from .errors import EmptySampleSet, NotInterior, PointNotInSet, Unbounded, UnsupportedVariant

NORMAL_TOL = 1e-9
SAMPLE_RADIUS = 10.0


def constraint_set(S: geo.ConvexSet, sys: itg.SystemSpec) -> geo.ConvexSet:
    """S ∩ cl(Dom A)."""
    dom = sys.domain
    if isinstance(dom, geo.WholeSpace):
        return S
    return geo.Intersection((S, dom))


def _prepare(S, sys, y, interior=True):
    y = geo.as_vector(y, sys.dim)
    if not S.contains(y):
        raise PointNotInSet("y is not in S")
    if interior and not geo.in_interior(sys.domain, y):
        raise NotInterior("y is not an interior point of Dom A")
    if not interior and not sys.domain.contains(y):
        raise PointNotInSet("y is not in cl(Dom A)")
    return y


def check_tangent(S: geo.ConvexSet, sys: itg.SystemSpec, y) -> bool:
    y = _prepare(S, sys, y)
    d = itg.right_derivative(sys, y)
    return geo.tangent_cone_contains(constraint_set(S, sys), y, d)


def check_normal(S: geo.ConvexSet, sys: itg.SystemSpec, y, variant: str = "min-section") -> float:
    """Signed margin; pass iff <= NORMAL_TOL.  No normals (interior point) gives 0."""
    if variant not in ("min-section", "set-min"):
        raise ValueError("variant must be 'min-section' or 'set-min'")
    y = _prepare(S, sys, y)
    gens = geo.normal_generators(constraint_set(S, sys), y)
    if not gens:
        return 0.0
    gens = np.array(gens)
    fy = sys.f(y)
    Q = ops.evaluate(sys.A, y)
    if variant == "min-section":
        d = fy - geo.project(Q, fy)
        return float(np.max(gens @ d))
    # the inner minimum is concave in xi, so take the sup over the hull of unit normals
    return ly.sup_min(geo.Hull(gens), Q, fy)


def trajectory_tolerance(h: float, y) -> float:
    return 10.0 * h * (1.0 + float(np.linalg.norm(y)))


def check_trajectory_invariance(S: geo.ConvexSet, sys: itg.SystemSpec, y, T: float, h: float) -> float:
    """Largest distance to S along the simulated trajectory from y."""
    y = _prepare(S, sys, y, interior=False)
    traj = itg.simulate(sys, y, T, h)
    return max(geo.distance(S, x) for x in traj.states)


def _has_ball(S):
    if isinstance(S, geo.Ball):
        return True
    if isinstance(S, geo.Intersection):
        return any(_has_ball(s) for s in S.sets)
    if isinstance(S, geo.Product):
        return any(_has_ball(s) for s in S.parts)
    return False


def check_convexified(S: geo.ConvexSet, sys: itg.SystemSpec, y, tol: float = NORMAL_TOL) -> bool:
    """Is [f(y) - Ay] ∩ T_K(y) nonempty?  y may sit on the boundary of Dom A."""
    if _has_ball(S):
        raise UnsupportedVariant("convexified test needs a polyhedral S")
    y = _prepare(S, sys, y, interior=False)
    gens = geo.normal_generators(constraint_set(S, sys), y)
    if not gens:
        return True
    fy = sys.f(y)
    Q = ops.evaluate(sys.A, y)
    # min over v in Ay of the largest normal component of f - v
    return ly.min_support(geo.Hull(np.array(gens)), Q, fy) <= tol


@dataclass
class InvarianceReport:
    n_points: int
    points: list
    tangent: list
    normal_min_section: list
    normal_set_min: list
    convexified: list
    trajectory_distance: list
    trajectory_max: float
    verdict: str
    witness: Optional[list]
    consistent: bool
    tolerances: dict
    config_hash: Optional[str] = None

    def to_dict(self):
        return {
            "config_hash": self.config_hash,
            "mode": "invariance",
            "n_points": self.n_points,
            "points": self.points,
            "tangent": self.tangent,
            "normal_min_section": self.normal_min_section,
            "normal_set_min": self.normal_set_min,
            "convexified": self.convexified,
            "trajectory_distance": self.trajectory_distance,
            "trajectory_max": self.trajectory_max,
            "verdict": self.verdict,
            "witness": self.witness,
            "consistent": self.consistent,
            "tolerances": self.tolerances,
        }


def sample_points(S: geo.ConvexSet, sys: itg.SystemSpec, n: int, seed: int = 0, box=None):
    """Points of S ∩ Int(Dom A), about half of them on the boundary of S.

    Quasi-random points of an enlarged box are projected onto S, so those
    falling outside land on the boundary, where the tests are informative.
    """
    from scipy.stats import qmc

    if box is None:
        K = constraint_set(S, sys)
        try:
            lo, hi = geo.bounding_box(K)
        except Unbounded:
            # unbounded K: sample the part within SAMPLE_RADIUS of the origin
            r = np.full(S.dim, SAMPLE_RADIUS)
            lo, hi = geo.bounding_box(geo.Intersection((K, geo.Box(-r, r))))
    else:
        lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    mid, half = (lo + hi) / 2, np.maximum((hi - lo) / 2, 1e-3)
    lo, hi = mid - 2 * half, mid + 2 * half
    sampler = qmc.Halton(d=S.dim, scramble=True, seed=seed)
    out = []
    for _ in range(50):
        for q in qmc.scale(sampler.random(2 * n), lo, hi):
            p = geo.project(S, q)
            if geo.in_interior(sys.domain, p):
                out.append(p)
                if len(out) == n:
                    return np.array(out)
    if not out:
        raise EmptySampleSet("no sample of S lies in Int(Dom A)")
    return np.array(out)


def check_invariance(S: geo.ConvexSet, sys: itg.SystemSpec, n_samples: int = 50, T: float = 1.0,
                     h: float = 1e-3, seed: int = 0, points=None) -> InvarianceReport:
    pts = sample_points(S, sys, n_samples, seed) if points is None else np.atleast_2d(points)
    polyhedral = not _has_ball(S)
    tan, nm, ns, cvx, dist = [], [], [], [], []
    witness, consistent = None, True
    for y in pts:
        t = check_tangent(S, sys, y)
        m1 = check_normal(S, sys, y, "min-section")
        m2 = check_normal(S, sys, y, "set-min")
        c = check_convexified(S, sys, y) if polyhedral else None
        dd = check_trajectory_invariance(S, sys, y, T, h)
        tan.append(bool(t))
        nm.append(m1)
        ns.append(m2)
        cvx.append(c)
        dist.append(dd)
        verdicts = {t, m1 <= NORMAL_TOL, m2 <= NORMAL_TOL} | ({c} if c is not None else set())
        if len(verdicts) > 1:
            consistent = False
        if witness is None and (not all(verdicts) or dd > trajectory_tolerance(h, y)):
            witness = y.tolist()
    pointwise_pass = all(tan) and max(nm) <= NORMAL_TOL and max(ns) <= NORMAL_TOL
    traj_pass = all(d <= trajectory_tolerance(h, y) for d, y in zip(dist, pts))
    if pointwise_pass and not traj_pass:
        consistent = False
    verdict = ly.CERTIFIED if pointwise_pass and traj_pass else ly.REFUTED
    return InvarianceReport(
        n_points=len(pts),
        points=pts.tolist(),
        tangent=tan,
        normal_min_section=nm,
        normal_set_min=ns,
        convexified=cvx,
        trajectory_distance=dist,
        trajectory_max=float(max(dist)),
        verdict=verdict,
        witness=witness,
        consistent=consistent,
        tolerances={"normal": NORMAL_TOL, "trajectory": f"10*h*(1+||y||), h={h}"},
    )
