"""Sweep the rho-horizon of x' = -k x over the decay rate k.

For x(t) = y e^{-k t} the horizon with rho = 1 solves 2|y|(1 - e^{-k t}) = 1/2,
so t* = ln(4|y| / (4|y| - 1)) / k when |y| > 1/4 and +inf otherwise.
"""
import argparse
import math

import numpy as np

from nslyap import functions as fn
from nslyap import integrator as itg
from nslyap import lyapunov as ly
from nslyap import operators as ops


def closed_form(k, y):
    if abs(y) <= 0.25:
        return math.inf
    return math.log(4 * abs(y) / (4 * abs(y) - 1)) / k


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--rates", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    args = p.parse_args(argv)

    cand = ly.LyapunovCandidate(fn.Quadratic(np.eye(1)), fn.constant(1, 0.0))
    print(f"{'k':>6} {'computed':>10} {'closed form':>12} {'abs err':>9}")
    for k in args.rates:
        sys_ = itg.SystemSpec(ops.Zero(1), itg.AffineDrift([[-k]]))
        got = ly.rho_horizon(cand, sys_, [args.y], h=args.h / k)
        ref = closed_form(k, args.y)
        err = abs(got - ref) if math.isfinite(ref) else float("nan")
        print(f"{k:6.2f} {got:10.5f} {ref:12.5f} {err:9.2e}")


if __name__ == "__main__":
    main()
