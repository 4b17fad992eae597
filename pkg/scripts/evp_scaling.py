#!/usr/bin/env python3
"""Scaling sweep for the variational-principle solver.

Generates descent instances of growing size, runs the half-residual
iteration, verifies conclusions (i)-(iii), cross-checks against the
brute-force admissible set, and prints wall time and iteration counts.
"""
import argparse
import sys
import time

import numpy as np

from regkit.ekeland import EVPInstance, evp_oracle, evp_solve, evp_verify
from regkit.metric import FiniteMetricSpace


def make_instance(n, seed):
    rng = np.random.default_rng(seed)
    coords = np.sort(rng.uniform(0.0, 50.0, size=n))
    space = FiniteMetricSpace.from_grid(coords)
    f = rng.uniform(0.0, 5.0, size=n)
    eps = float(rng.uniform(0.5, 3.0))
    lam = float(rng.uniform(0.5, 5.0))
    admissible = np.nonzero(f < f.min() + eps - 1e-9)[0]
    return EVPInstance(space=space, f=f, eps=eps, lam=lam,
                       x0=int(rng.choice(admissible)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[100, 500, 1000, 5000, 10000])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"{'|X|':>7} {'iters':>6} {'solve ms':>9} {'oracle ms':>10} "
          f"{'|adm|':>6} {'verified':>9}")
    all_ok = True
    for n in args.sizes:
        for rep in range(args.repeats):
            inst = make_instance(n, args.seed + 31 * rep + n)
            t0 = time.perf_counter()
            res = evp_solve(inst)
            t1 = time.perf_counter()
            admissible = evp_oracle(inst)
            t2 = time.perf_counter()
            chk = evp_verify(inst, res.z)
            ok = chk.ok and int(res.z) in set(admissible.tolist())
            all_ok &= ok
            print(f"{n:>7} {res.n_iter:>6} {1e3 * (t1 - t0):>9.1f} "
                  f"{1e3 * (t2 - t1):>10.1f} {admissible.size:>6} "
                  f"{'yes' if ok else 'NO':>9}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
