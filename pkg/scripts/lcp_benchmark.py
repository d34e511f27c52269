"""Compare solve_lcp with complementary-basis enumeration on random monotone LCPs."""
import argparse
import itertools
import time

import numpy as np

from nslyap import lcs


def enumerate_lcp(M, q):
    m = q.size
    for r in range(m + 1):
        for a in map(list, itertools.combinations(range(m), r)):
            u = np.zeros(m)
            if a:
                try:
                    u[a] = np.linalg.solve(M[np.ix_(a, a)], -q[a])
                except np.linalg.LinAlgError:
                    continue
            if u.min() >= -1e-9 and (q + M @ u).min() >= -1e-9:
                return u
    return None


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--max-m", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    methods, worst, mismatches = {}, 0.0, 0
    t_solver = t_oracle = 0.0
    for _ in range(args.n):
        m = int(rng.integers(1, args.max_m + 1))
        R, S = rng.standard_normal((2, m, m))
        M = R @ R.T + 0.5 * (S - S.T) + 1e-2 * np.eye(m)
        q = 3 * rng.standard_normal(m)
        t0 = time.perf_counter()
        sol = lcs.solve_lcp(M, q)
        t1 = time.perf_counter()
        u = enumerate_lcp(M, q)
        t_oracle += time.perf_counter() - t1
        t_solver += t1 - t0
        methods[sol.method] = methods.get(sol.method, 0) + 1
        worst = max(worst, sol.residual / (1 + np.linalg.norm(q)))
        mismatches += u is None or not np.allclose(u, sol.u, atol=1e-7)
    print(f"instances        {args.n}")
    print(f"methods          {methods}")
    print(f"oracle mismatch  {mismatches}")
    print(f"worst residual   {worst:.2e}  (relative to 1 + ||q||)")
    print(f"time solver      {t_solver:.2f} s")
    print(f"time enumeration {t_oracle:.2f} s")


if __name__ == "__main__":
    main()
