"""Pointwise and trajectory tests for weighted Lyapunov pairs (V, W, a).

A pair satisfies, along every solution started at y,

    e^{a t} V(x(t; y)) + int_0^t W(x(s; y)) ds <= V(y).

The pointwise tests evaluate the dual (subgradient) and primal (Dini) forms
at sampled points of the interior of Dom A.  Variants:

    i    sup_{xi in dV} min_{v in Ay} <xi, f - v>          + aV + W
    ii   sup_{xi in dV} <xi, f - proj_{Ay} f>              + aV + W
    iv   V'(y; f - proj_{Ay} f)                            + aV + W
    v    inf_{v in Ay} V'(y; f - v)                        + aV + W
    vi   variant i with a -> 0 and W -> aV + W (needs V >= 0)

A margin <= tolerance means the criterion holds at y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import functions as fn
from . import geometry as geo
from . import integrator as itg
from . import operators as ops
from .errors import (
    DomainViolation,
    EmptySampleSet,
    NonConvergence,
    NotInterior,
    NotLipschitz,
    NotNonnegative,
    SetupViolation,
    ZeroCoefficient,
)

VARIANTS = ("i", "ii", "iv", "v", "vi")
PASS_ABS = 1e-9
PASS_REL = 1e-9
GRONWALL_TOL = 1e-6

CERTIFIED = "Certified-on-samples"
REFUTED = "Refuted"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class LyapunovCandidate:
    V: fn.FunctionSpec
    W: fn.FunctionSpec
    a: float = 0.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("a must be nonnegative")
        if self.V.dim != self.W.dim:
            raise geo.DimensionMismatch("V and W differ in dimension")
        object.__setattr__(self, "a", float(self.a))

    @property
    def dim(self):
        return self.V.dim


@dataclass
class CheckReport:
    mode: str
    variant: Optional[str]
    n_points: int
    worst_margin: float
    witness: Optional[list]
    verdict: str
    tolerances: dict
    n_empty_subdiff: int = 0
    trajectory_worst: Optional[float] = None
    trajectory_witness: Optional[list] = None
    consistent: bool = True
    config_hash: Optional[str] = None

    def to_dict(self):
        return {
            "config_hash": self.config_hash,
            "mode": self.mode,
            "variant": self.variant,
            "n_points": self.n_points,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "verdict": self.verdict,
            "tolerances": self.tolerances,
            "n_empty_subdiff": self.n_empty_subdiff,
            "trajectory_worst": self.trajectory_worst,
            "trajectory_witness": self.trajectory_witness,
            "consistent": self.consistent,
        }


def pass_tolerance(Vy: float) -> float:
    return PASS_ABS + PASS_REL * abs(Vy)


def trajectory_tolerance(h: float, Vy: float) -> float:
    return 10.0 * h * (1.0 + abs(Vy))


# ---------------------------------------------------------------------------
# saddle values over catalog sets


def _solve(prob):
    import cvxpy as cp

    prob.solve(solver=cp.CLARABEL)
    return prob.status


def sup_min(P, Q, f) -> float:
    """sup over xi in P of min over v in Q of <xi, f - v>."""
    f = np.asarray(f, dtype=float)
    if isinstance(Q, geo.Singleton):
        return geo.support(P, f - Q.point)
    if isinstance(P, geo.Singleton):
        return float(P.point @ f) - geo.support(Q, P.point)
    import cvxpy as cp

    xi = cp.Variable(P.dim)
    sig, cons = geo.cvx_support(Q, xi)
    prob = cp.Problem(cp.Maximize(f @ xi - sig), cons + geo.cvx_constraints(P, xi))
    status = _solve(prob)
    if status in ("unbounded", "unbounded_inaccurate"):
        return np.inf
    if status in ("infeasible", "infeasible_inaccurate"):
        return -np.inf
    if status not in ("optimal", "optimal_inaccurate"):
        raise NonConvergence(f"saddle solve: {status}")
    return float(prob.value)


def min_support(D, Q, f) -> float:
    """inf over v in Q of support(D, f - v)."""
    f = np.asarray(f, dtype=float)
    if isinstance(Q, geo.Singleton):
        return geo.support(D, f - Q.point)
    if isinstance(D, geo.Singleton):
        return float(D.point @ f) - geo.support(Q, D.point)
    import cvxpy as cp

    v = cp.Variable(Q.dim)
    sig, cons = geo.cvx_support(D, f - v)
    prob = cp.Problem(cp.Minimize(sig), cons + geo.cvx_constraints(Q, v))
    status = _solve(prob)
    if status in ("unbounded", "unbounded_inaccurate"):
        return -np.inf
    if status in ("infeasible", "infeasible_inaccurate"):
        return np.inf
    if status not in ("optimal", "optimal_inaccurate"):
        raise NonConvergence(f"saddle solve: {status}")
    return float(prob.value)


# ---------------------------------------------------------------------------
# pointwise criteria


def _prepare(cand, sys, y):
    y = geo.as_vector(y, sys.dim)
    Vy = cand.V.value(y)
    if not np.isfinite(Vy):
        raise DomainViolation("y is outside Dom V")
    if not geo.in_interior(sys.domain, y):
        raise NotInterior("y is not an interior point of Dom A")
    Wy = cand.W.value(y)
    if not np.isfinite(Wy) or Wy < 0:
        raise DomainViolation("W(y) must be finite and nonnegative")
    return y, Vy, Wy


def proximal_empty(V: fn.FunctionSpec, y) -> bool:
    return fn.subdifferential(V, y, fn.SubdiffKind.PROXIMAL) is fn.EMPTY


def check_pointwise(cand: LyapunovCandidate, sys: itg.SystemSpec, y, variant: str = "ii") -> float:
    """Signed margin of the chosen criterion at y; <= pass_tolerance(V(y)) means pass.

    An empty proximal subdifferential gives -inf for the dual variants.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    y, Vy, Wy = _prepare(cand, sys, y)
    V = cand.V
    fy = sys.f(y)
    Q = ops.evaluate(sys.A, y)
    extra = cand.a * Vy + Wy
    if variant in ("i", "ii", "vi"):
        P = fn.subdifferential(V, y, fn.SubdiffKind.PROXIMAL)
        if P is fn.EMPTY:
            return -np.inf
        if variant == "ii":
            d = fy - geo.project(Q, fy)
            return geo.support(P, d) + extra
        if variant == "vi":
            if Vy < 0:
                raise NotNonnegative("variant vi needs V >= 0")
            # the pair (V, aV + W) with a = 0
            return sup_min(P, Q, fy) + (cand.a * Vy + Wy)
        return sup_min(P, Q, fy) + extra
    sets = fn.dini_sets(V, y)
    if variant == "iv":
        d = fy - geo.project(Q, fy)
        return min(geo.support(D, d) for D in sets) + extra
    return min(min_support(D, Q, fy) for D in sets) + extra


def passes(margin: float, Vy: float) -> bool:
    return margin <= pass_tolerance(Vy)


# ---------------------------------------------------------------------------
# trajectory criteria


def trajectory_profile(cand: LyapunovCandidate, sys: itg.SystemSpec, y, T: float, h: float,
                       form: str = "weighted"):
    """(times, lhs) with lhs_k = e^{a t_k} V(x_k) + int_0^{t_k} W (form 'weighted')
    or V(x_k) + a int V + int W (form 'integral')."""
    traj = itg.simulate(sys, y, T, h)
    t = traj.times
    Vs = np.array([cand.V.value(x) for x in traj.states])
    Ws = np.array([cand.W.value(x) for x in traj.states])
    dt = np.diff(t)
    intW = np.concatenate([[0.0], np.cumsum(0.5 * dt * (Ws[1:] + Ws[:-1]))])
    if form == "weighted":
        with np.errstate(invalid="ignore"):
            lhs = np.exp(cand.a * t) * Vs + intW
    elif form == "integral":
        intV = np.concatenate([[0.0], np.cumsum(0.5 * dt * (Vs[1:] + Vs[:-1]))])
        lhs = Vs + cand.a * intV + intW
    else:
        raise ValueError("form must be 'weighted' or 'integral'")
    return t, lhs


def check_trajectory(cand: LyapunovCandidate, sys: itg.SystemSpec, y, T: float, h: float,
                     form: str = "weighted") -> float:
    """max_k lhs_k - V(y); pass iff <= trajectory_tolerance(h, V(y))."""
    y = geo.as_vector(y, sys.dim)
    Vy = cand.V.value(y)
    if not np.isfinite(Vy):
        raise DomainViolation("y is outside Dom V")
    _, lhs = trajectory_profile(cand, sys, y, T, h, form)
    return float(np.max(lhs - Vy))


def certify(cand: LyapunovCandidate, sys: itg.SystemSpec, region: geo.ConvexSet,
            n_samples: int = 100, variant: str = "ii", T: float = 1.0, h: float = 1e-3,
            seed: int = 0, trajectories: bool = True) -> CheckReport:
    """Sample the region, run the pointwise criterion and the trajectory test at each point."""
    def admissible(p):
        return np.isfinite(cand.V.value(p)) and geo.in_interior(sys.domain, p)

    pts = geo.quasi_random_points(region, n_samples, seed, accept=admissible)
    if len(pts) == 0:
        raise EmptySampleSet("no admissible sample points in region")
    margins, empties, viols = [], 0, []
    worst_excess, witness = -np.inf, None
    for y in pts:
        Vy = cand.V.value(y)
        if cand.W.value(y) < 0:
            raise DomainViolation("W is negative at a sample point")
        m = check_pointwise(cand, sys, y, variant)
        margins.append(m)
        if proximal_empty(cand.V, y):
            empties += 1
        if m - pass_tolerance(Vy) > worst_excess or witness is None:
            worst_excess, witness = m - pass_tolerance(Vy), y
        if trajectories:
            v = check_trajectory(cand, sys, y, T, h, "integral" if variant == "vi" else "weighted")
            viols.append(v - trajectory_tolerance(h, Vy))
    margins = np.array(margins)
    worst = float(np.max(margins))
    point_fail = worst_excess > 0
    traj_worst = traj_witness = None
    traj_fail = False
    if trajectories:
        k = int(np.argmax(viols))
        traj_worst = float(viols[k] + trajectory_tolerance(h, cand.V.value(pts[k])))
        traj_witness = pts[k].tolist()
        traj_fail = viols[k] > 0
    if empties == len(pts):
        verdict = INCONCLUSIVE
    elif point_fail or traj_fail:
        verdict = REFUTED
    else:
        verdict = CERTIFIED
    if traj_fail and not point_fail:
        witness = pts[int(np.argmax(viols))]
    return CheckReport(
        mode="pointwise+trajectory" if trajectories else "pointwise",
        variant=variant,
        n_points=len(pts),
        worst_margin=worst,
        witness=None if witness is None else np.asarray(witness).tolist(),
        verdict=verdict,
        tolerances={"pass_abs": PASS_ABS, "pass_rel": PASS_REL, "trajectory": f"10*h*(1+|V(y)|), h={h}"},
        n_empty_subdiff=empties,
        trajectory_worst=traj_worst,
        trajectory_witness=traj_witness,
        consistent=not (traj_fail and not point_fail),
    )


# ---------------------------------------------------------------------------
# Gronwall, horizon, regularity, augmentation


def gronwall_bound(a: float, b: float, psi1: float, t1: float, t: float) -> float:
    """(psi(t1) + b/a) e^{a (t - t1)} - b/a."""
    if a == 0:
        raise ZeroCoefficient("a must be nonzero")
    if b < 0:
        raise ValueError("b must be nonnegative")
    if t < t1:
        raise ValueError("need t >= t1")
    return (psi1 + b / a) * math.exp(a * (t - t1)) - b / a


def verify_gronwall(times, psi, a: float, b: float, tol: float = GRONWALL_TOL) -> bool:
    """psi_k <= bound(t_k) + tol at every sample, with the bound anchored at the first sample."""
    times = np.asarray(times, dtype=float)
    psi = np.asarray(psi, dtype=float)
    t1, p1 = times[0], psi[0]
    return all(p <= gronwall_bound(a, b, p1, t1, t) + tol for t, p in zip(times, psi))


def _superlevel_radius(V, y, lam_bar, r_max, n_dirs=64, n_radii=40):
    dirs = np.vstack([np.eye(y.size), -np.eye(y.size), fn._probe_directions(y.size, n_dirs)])
    radii = r_max * np.logspace(-6, 0, n_radii)
    good = 0.0
    for r in radii:
        if any(V.value(y + r * d) <= lam_bar for d in dirs):
            return good
        good = r
    return r_max


def rho_horizon(cand: LyapunovCandidate, sys: itg.SystemSpec, y, rho_bar: float = np.inf,
                lam_bar: float = -np.inf, h: float = 1e-3, ybar=None, T_max: float = 10.0,
                rho_scale: float = 1.0, n_rho: int = 32) -> float:
    """Estimate of the horizon rho(y): sup of nu for which some admissible radius rho keeps
    2||x(t;y) - y|| < rho/2 and |(e^{-at} - 1)V(y) - int_0^t W| < rho/2 on [0, nu].

    Radii are searched on a log grid of ``n_rho`` values below the largest admissible
    radius (``rho_scale`` when no constraint bounds it).  +inf means no violation
    within ``T_max``.
    """
    y = geo.as_vector(y, sys.dim)
    ybar = y if ybar is None else geo.as_vector(ybar, sys.dim)
    if not sys.domain.contains(y):
        raise SetupViolation("y must lie in cl(Dom A)")
    Vy = cand.V.value(y)
    if not np.isfinite(Vy) or not Vy > lam_bar:
        raise SetupViolation("need V(y) > lambda_bar")
    gap = float(np.linalg.norm(y - ybar))
    if gap > rho_bar:
        raise SetupViolation("y outside B_rho_bar(ybar)")
    cap = rho_bar - gap if np.isfinite(rho_bar) else np.inf
    if np.isfinite(lam_bar):
        cap = min(cap, _superlevel_radius(cand.V, y, lam_bar, cap if np.isfinite(cap) else rho_scale))
    if not np.isfinite(cap):
        cap = rho_scale
    if cap <= 0:
        return 0.0
    traj = itg.simulate(sys, y, T_max, h)
    t = traj.times
    q1 = 2.0 * np.linalg.norm(traj.states - y, axis=1)
    Ws = np.array([cand.W.value(x) for x in traj.states])
    intW = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (Ws[1:] + Ws[:-1]))])
    q2 = np.abs((np.exp(-cand.a * t) - 1.0) * Vy - intW)
    q = np.maximum(q1, q2)
    best = 0.0
    for rho in cap * np.logspace(0, -6, n_rho):
        bad = np.flatnonzero(q >= rho / 2)
        if bad.size == 0:
            return np.inf
        k = bad[0]
        if k == 0:
            continue
        # linear interpolation of the first crossing
        frac = (rho / 2 - q[k - 1]) / (q[k] - q[k - 1]) if q[k] > q[k - 1] else 0.0
        best = max(best, t[k - 1] + frac * (t[k] - t[k - 1]))
    return float(best)


def check_regularity(V: fn.FunctionSpec, A: ops.MonotoneOperator, y, n_samples: int = 64,
                     kmax: int = 20, tol: float = 1e-4) -> bool:
    """Sampled test of liminf_{z -> y, z in Dom A} V(z) = V(y) over shells of radius 2^-k.

    A necessary check on samples, not a proof.
    """
    y = geo.as_vector(y, A.dim)
    dom = A.domain
    if not dom.contains(y):
        raise DomainViolation("y must lie in cl(Dom A)")
    Vy = V.value(y)
    if not np.isfinite(Vy):
        return False
    dirs = np.vstack([np.eye(y.size), -np.eye(y.size),
                      fn._probe_directions(y.size, max(n_samples - 2 * y.size, 1))])
    shell_mins = []
    for k in range(1, kmax + 1):
        r = 2.0 ** -k
        vals = []
        for d in dirs:
            z = geo.project(dom, y + r * d)
            if np.linalg.norm(z - y) > 1e-3 * r:
                vals.append(V.value(z))
        if vals:
            shell_mins.append(min(vals))
    if not shell_mins:
        return True
    tail = shell_mins[-5:]
    return all(np.isfinite(m) and abs(m - Vy) <= tol for m in tail)


def global_lipschitz(W: fn.FunctionSpec) -> float:
    """A global Lipschitz constant for the catalog members that have one."""
    if isinstance(W, fn.Affine):
        return float(np.linalg.norm(W.q))
    if isinstance(W, fn.Quadratic) and np.allclose(W.P, 0):
        return float(np.linalg.norm(W.q))
    if isinstance(W, fn.ScaledNorm):
        return W.weight * (math.sqrt(W.dim) if W.p == 1 else 1.0)
    if isinstance(W, (fn.MaxOf, fn.MinOf)):
        return max(global_lipschitz(p) for p in W.pieces)
    if isinstance(W, (fn.PlusIndicator, fn.Envelope)):
        return global_lipschitz(W.base)
    raise NotLipschitz("W has no global Lipschitz constant; pass w_lipschitz or use regularize_W")


def augment(sys: itg.SystemSpec, cand: LyapunovCandidate, w_lipschitz: float = None) -> itg.SystemSpec:
    """System on (x, alpha, gamma) with drift (f(x), W(x), 0) and operator A x 0 x 0."""
    L_W = global_lipschitz(cand.W) if w_lipschitz is None else float(w_lipschitz)
    A = ops.ProductOperator((sys.A, ops.Zero(2)))
    return itg.SystemSpec(A, itg.AugmentedDrift(sys.f, cand.W, L_W))


def closed_form_z(sys: itg.SystemSpec, cand: LyapunovCandidate, t: float, y, alpha: float,
                  gamma: float, h: float) -> np.ndarray:
    """(x(t;y), alpha + int_0^t W(x), gamma), with x and the integral from the unaugmented flow."""
    traj = itg.simulate(sys, y, t, h)
    Ws = np.array([cand.W.value(x) for x in traj.states])
    integral = float(np.sum(0.5 * np.diff(traj.times) * (Ws[1:] + Ws[:-1]))) if len(Ws) > 1 else 0.0
    return np.concatenate([traj.final, [alpha + integral, gamma]])
