#!/usr/bin/env python3
"""Agreement sweep: exact tangent cones vs the sampled-limit oracle.

Draws random bounded polyhedra, walks to a boundary point, and compares
exact membership in the tangent cone against the LP-distance
sampled-limit oracle over random unit directions.  Prints one row per
polyhedron and an overall agreement rate.
"""
import argparse
import sys

import numpy as np

from regkit.polyhedra import (Polyhedron, sample_directions,
                              sampled_tangent_membership, tangent_cone)


def random_boundary_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = int(rng.integers(n, 2 * n + 3))
    A = rng.normal(size=(m, n))
    b = A @ (rng.normal(size=n) * 0.5) + rng.uniform(0.1, 1.0, size=m)
    P = Polyhedron(A, b)
    x0 = P.interior_point()
    d = rng.normal(size=n)
    Ad = P.A @ d
    slack = P.b - P.A @ x0
    pos = Ad > 1e-12
    if not pos.any():
        return None
    return P, x0 + (slack[pos] / Ad[pos]).min() * d, rng


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--dirs", type=int, default=200)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    total = agree = 0
    made = 0
    seed = args.seed
    print(f"{'inst':>4} {'dim':>3} {'rows':>4} {'active':>6} {'agree':>7}")
    while made < args.instances:
        inst = random_boundary_instance(seed)
        seed += 1
        if inst is None:
            continue
        P, x, rng = inst
        made += 1
        T = tangent_cone(P, x)
        dirs = sample_directions(P.dim, args.dirs, rng)
        ok = 0
        for d in dirs:
            # skip tol-boundary directions where both answers are defensible
            if np.abs(T.A @ d).min(initial=np.inf) < 10 * args.tol:
                ok += 1
                continue
            exact = T.contains(d)
            lim = sampled_tangent_membership(P, x, d, tol=args.tol).member
            ok += exact == lim
        total += args.dirs
        agree += ok
        print(f"{made:>4} {P.dim:>3} {P.m:>4} {T.m:>6} "
              f"{ok / args.dirs:>7.3f}")
    rate = agree / total
    print(f"\noverall agreement: {agree}/{total} = {rate:.4f}")
    return 0 if rate >= 0.99 else 1


if __name__ == "__main__":
    sys.exit(main())
