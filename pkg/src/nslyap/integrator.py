"""Semi-implicit time stepping for x' in f(x) - A x.

One step is x+ = J_{hA}(x + h f(x)): explicit in the Lipschitz drift,
implicit in the monotone operator.  Every iterate therefore lies in Dom A.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry as geo
from . import operators as ops
from .errors import BallNotInterior, OutsideDomain, SolverFailure, StepTooLarge

STEP_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AffineDrift:
    """x -> sigma(F x + b) with sigma the identity, componentwise clipping to [-1, 1], or tanh."""

    F: np.ndarray
    b: np.ndarray = None
    nonlinearity: str = "none"

    def __post_init__(self):
        F = np.atleast_2d(np.array(self.F, dtype=float))
        b = np.zeros(F.shape[0]) if self.b is None else geo.as_vector(self.b, F.shape[0])
        if self.nonlinearity not in ("none", "sat", "tanh"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        F.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.F.shape[1]

    @property
    def lipschitz(self) -> float:
        # clipping and tanh are both 1-Lipschitz
        return float(np.linalg.norm(self.F, 2))

    def __call__(self, x):
        u = self.F @ x + self.b
        if self.nonlinearity == "sat":
            return np.clip(u, -1.0, 1.0)
        if self.nonlinearity == "tanh":
            return np.tanh(u)
        return u


def constant_drift(c) -> AffineDrift:
    c = geo.as_vector(c)
    return AffineDrift(np.zeros((c.size, c.size)), c)


@dataclass(frozen=True, eq=False)
class AugmentedDrift:
    """(x, alpha, gamma) -> (f(x), W(x), 0)."""

    base: object
    W: object
    w_lipschitz: float

    @property
    def dim(self):
        return self.base.dim + 2

    @property
    def lipschitz(self) -> float:
        return float(math.hypot(self.base.lipschitz, self.w_lipschitz))

    def __call__(self, z):
        n = self.base.dim
        x = z[:n]
        return np.concatenate([self.base(x), [self.W.value(x)], [0.0]])


@dataclass(frozen=True, eq=False)
class SystemSpec:
    A: ops.MonotoneOperator
    f: object
    L_f: Optional[float] = None

    def __post_init__(self):
        if self.f.dim != self.A.dim:
            raise geo.DimensionMismatch("drift and operator dimensions differ")
        if self.L_f is None:
            object.__setattr__(self, "L_f", float(self.f.lipschitz))
        if self.L_f < 0:
            raise ValueError("L_f must be nonnegative")

    @property
    def dim(self):
        return self.A.dim

    @property
    def domain(self):
        return self.A.domain

    @property
    def h_max(self) -> float:
        return 0.1 if self.L_f == 0 else min(0.1, 1.0 / (10.0 * self.L_f))

    @property
    def interior_nonempty(self) -> bool:
        return geo.has_interior(self.domain)


@dataclass(eq=False)
class Trajectory:
    h: float
    times: np.ndarray
    states: np.ndarray
    residuals: np.ndarray
    derivatives: np.ndarray
    inputs: Optional[np.ndarray] = None
    comp_residuals: Optional[np.ndarray] = None

    @property
    def final(self):
        return self.states[-1]

    def to_csv(self, path):
        n = self.states.shape[1]
        header = ["t"] + [f"x_{i + 1}" for i in range(n)] + ["residual"]
        if self.inputs is not None:
            header += [f"u_{j + 1}" for j in range(self.inputs.shape[1])] + ["comp_residual"]
        fmt = "{:.17g}".format
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [fmt(t)] + [fmt(v) for v in self.states[k]] + [fmt(self.residuals[k])]
                if self.inputs is not None:
                    row += [fmt(v) for v in self.inputs[k]] + [fmt(self.comp_residuals[k])]
                w.writerow(row)


def read_trajectory_csv(path):
    """(header, rows) of a trajectory CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def right_derivative(sys: SystemSpec, y) -> np.ndarray:
    """f(y) - proj_{Ay}(f(y)), the right derivative of the solution through y."""
    y = geo.as_vector(y, sys.dim)
    fy = sys.f(y)
    return fy - ops.project_onto_value(sys.A, y, fy)


def _step(sys, x, h):
    z = x + h * sys.f(x)
    x_new = ops._resolvent(sys.A, h, z)
    res = ops._inclusion_residual(sys.A, h, z, x_new)
    return x_new, res


def step(sys: SystemSpec, x, h: float) -> np.ndarray:
    x = geo.as_vector(x, sys.dim)
    x_new, res = _step(sys, x, h)
    if res > STEP_RESIDUAL_TOL * (1 + np.linalg.norm(x_new)):
        raise SolverFailure("step inclusion residual too large", residual=res)
    return x_new


def _grid(T, h):
    if T == 0:
        return np.zeros(1)
    N = max(1, math.ceil(T / h - 1e-9))
    times = np.arange(N + 1, dtype=float) * h
    times[-1] = T
    return times


def simulate(sys: SystemSpec, x0, T: float, h: float, enforce_step: bool = True) -> Trajectory:
    """Fixed-step trajectory on [0, T]; the last step is shortened to land on T."""
    x0 = geo.as_vector(x0, sys.dim)
    if T < 0 or not h > 0:
        raise ValueError("need T >= 0 and h > 0")
    if enforce_step and h > sys.h_max * (1 + 1e-12):
        raise StepTooLarge(f"h={h} exceeds h_max={sys.h_max}")
    if not sys.domain.contains(x0):
        raise OutsideDomain("initial point outside domain")
    times = _grid(T, h)
    N = times.size - 1
    states = np.empty((N + 1, sys.dim))
    residuals = np.zeros(N + 1)
    states[0] = x0
    x = x0
    for k in range(N):
        hk = times[k + 1] - times[k]
        x, res = _step(sys, x, hk)
        if res > STEP_RESIDUAL_TOL * (1 + np.linalg.norm(x)):
            raise SolverFailure(f"inclusion residual too large at step {k}", residual=res)
        states[k + 1] = x
        residuals[k + 1] = res
    derivs = np.diff(states, axis=0) / np.diff(times)[:, None] if N else np.zeros((0, sys.dim))
    return Trajectory(h, times, states, residuals, derivs)


def check_semigroup(sys: SystemSpec, x0, s: float, t: float, h: float) -> float:
    """||x(s; x(t; x0)) - x(s + t; x0)|| for the discrete flow."""
    if s < 0 or t < 0:
        raise ValueError("s and t must be nonnegative")
    xt = simulate(sys, x0, t, h).final
    restarted = simulate(sys, xt, s, h).final
    continued = simulate(sys, x0, s + t, h).final if s > 0 else xt
    return float(np.linalg.norm(restarted - continued))


def check_nonexpansive(sys: SystemSpec, x0, y0, t: float, h: float):
    """(||x(t;x0) - x(t;y0)||, e^{L_f t} ||x0 - y0|| (1 + 10 h))."""
    x0 = geo.as_vector(x0, sys.dim)
    y0 = geo.as_vector(y0, sys.dim)
    lhs = float(np.linalg.norm(simulate(sys, x0, t, h).final - simulate(sys, y0, t, h).final))
    rhs = math.exp(sys.L_f * t) * float(np.linalg.norm(x0 - y0)) * (1 + 10 * h)
    return lhs, rhs


def _ball_samples(center, rho, count, seed):
    from scipy.stats import qmc

    n = center.size
    pts = [center.copy()]
    for i in range(n):
        e = np.zeros(n)
        e[i] = rho
        pts += [center + e, center - e]
    if count > len(pts):
        rng = qmc.Halton(d=n + 1, scramble=True, seed=seed)
        u = rng.random(count - len(pts))
        from scipy.special import ndtri

        g = ndtri(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rho * u[:, n] ** (1.0 / n)
        pts += list(center + g * r[:, None])
    return np.array(pts[:max(count, 1)])


def local_bound_probe(sys: SystemSpec, ybar, rho: float, samples: int, h: float = 1e-3,
                      seed: int = 0):
    """Probe the bound ||d+x/dt(t)|| <= e^{L_f} M for starts in B_rho(ybar), t <= 1.

    Returns ``(M, worst_ratio)`` with M the largest sampled ||(f(z) - Az)°||.
    """
    ybar = geo.as_vector(ybar, sys.dim)
    if geo.depth(sys.domain, ybar) < rho:
        raise BallNotInterior("B_rho(ybar) is not inside the interior of Dom A")
    pts = _ball_samples(ybar, rho, samples, seed)
    M = max(float(np.linalg.norm(right_derivative(sys, z))) for z in pts)
    bound = math.exp(sys.L_f) * M
    worst = 0.0
    for y in pts:
        traj = simulate(sys, y, 1.0, h)
        peak = float(np.max(np.linalg.norm(traj.derivatives, axis=1)))
        if peak == 0:
            continue
        worst = max(worst, peak / bound if bound > 0 else np.inf)
    return M, worst
