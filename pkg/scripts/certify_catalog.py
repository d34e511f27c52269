"""Certify a few Lyapunov candidates on sample systems and print a verdict table."""
import argparse

import numpy as np

from nslyap import functions as fn
from nslyap import geometry as geo
from nslyap import integrator as itg
from nslyap import lyapunov as ly
from nslyap import operators as ops


def scenarios():
    half = ops.NormalConeOf(geo.nonneg_orthant(1))
    box = ops.NormalConeOf(geo.Box([-1.0, -1.0], [1.0, 1.0]))
    rot = itg.AffineDrift([[-1.0, 2.0], [-2.0, -1.0]], nonlinearity="sat")
    z1, z2 = fn.constant(1, 0.0), fn.constant(2, 0.0)
    yield ("decay, exact pair", itg.SystemSpec(half, itg.AffineDrift([[-1.0]])),
           ly.LyapunovCandidate(fn.Quadratic(np.eye(1)), fn.Quadratic(2 * np.eye(1))), geo.Box([0.1], [2.0]))
    yield ("decay, weighted", itg.SystemSpec(half, itg.AffineDrift([[-1.0]])),
           ly.LyapunovCandidate(fn.Quadratic(np.eye(1)), z1, 2.0), geo.Box([0.1], [2.0]))
    yield ("growth", itg.SystemSpec(ops.Zero(1), itg.AffineDrift([[1.0]])),
           ly.LyapunovCandidate(fn.Quadratic(np.eye(1)), z1), geo.Box([0.5], [1.0]))
    yield ("saturated spiral, |x|^2", itg.SystemSpec(box, rot),
           ly.LyapunovCandidate(fn.Quadratic(np.eye(2)), z2), geo.Box([-0.9, -0.9], [0.9, 0.9]))
    yield ("saturated spiral, l1 norm", itg.SystemSpec(box, rot),
           ly.LyapunovCandidate(fn.ScaledNorm(1.0, 1, 2), z2), geo.Box([-0.9, -0.9], [0.9, 0.9]))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--variant", default="ii", choices=ly.VARIANTS)
    args = p.parse_args(argv)

    print(f"{'scenario':<28} {'verdict':<22} {'worst margin':>13} {'traj worst':>11} consistent")
    for name, sys_, cand, region in scenarios():
        rep = ly.certify(cand, sys_, region, args.n, args.variant, args.T, args.h)
        print(f"{name:<28} {rep.verdict:<22} {rep.worst_margin:13.3e} {rep.trajectory_worst:11.3e} "
              f"{rep.consistent}")


if __name__ == "__main__":
    main()
