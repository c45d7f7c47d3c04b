"""Certify the general and ladder-model theorems on a small near-orthonormal matrix
and replay Monte-Carlo sequences against their guarantees.

usage: python3 scripts/certify_small.py [--n 16] [--c 0.005] [--sequences 100]
"""
import argparse
import math

import numpy as np

from recsparse.analysis import RipAccess, TheoremParams, check_theorem, fill_prescribed, verify_conclusions
from recsparse.harness import track
from recsparse.sensing import gen_bounded_uniform_noise, measure, stream
from recsparse.signal_model import Model1Params, generate_sequence


def near_orthonormal(n, seed, jitter=0.02):
    rng = stream(seed, 99)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q * np.sign(np.diag(R)) + jitter * rng.standard_normal((n, n)) / np.sqrt(n)
    return A / np.linalg.norm(A, axis=0)


def replay(theorem, A, mp, params, c, sequences, frames=30):
    rip = RipAccess(A)
    p = fill_prescribed(theorem, params, rip)
    rep = check_theorem(theorem, p, rip)
    print(f"theorem {theorem}: {rep.status}")
    for cond in rep.conditions:
        print(f"  {cond.id:14s} {cond.verdict:9s} {cond.description}")
    totals = {}
    for seed in range(sequences):
        X = np.vstack([s.x for s in generate_sequence(mp, frames, (seed, 0))])
        fr = [(A, None, measure(A, X[t], gen_bounded_uniform_noise(A.shape[0], c, (seed, 1, t)), t, c))
              for t in range(frames)]
        outs = track("modcs", fr, X, alpha=p.alpha, check=True)
        r = check_theorem(theorem, p, rip, trace=X)
        # the initial-frame condition is asserted above; confirm it on this sequence
        if not (r.passed and np.array_equal(outs[0].support_estimate, np.flatnonzero(X[0]))):
            totals["sequence conditions failed"] = totals.get("sequence conditions failed", 0) + 1
            continue
        for k, v in verify_conclusions(r, outs, X, p).items():
            totals[k] = totals.get(k, 0) + v
    print("  guarantee violations over", sequences, "sequences:", totals)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--c", type=float, default=0.005)
    ap.add_argument("--sequences", type=int, default=100)
    args = ap.parse_args()
    A = near_orthonormal(args.n, 7)
    eps = args.c * math.sqrt(args.n)
    replay("3.2", A, Model1Params(S=3, S_a=1, r=0.5, d=1, m=args.n),
           TheoremParams(S=3, S_a=1, epsilon=eps, initial_exact=True), args.c, args.sequences)
    replay("4.3", A, Model1Params(S=3, S_a=1, r=0.2, d=2, m=args.n),
           TheoremParams(S=3, S_a=1, epsilon=eps, r=0.2, d=2, d0=2, initial_exact=True), args.c, args.sequences)


if __name__ == "__main__":
    main()
