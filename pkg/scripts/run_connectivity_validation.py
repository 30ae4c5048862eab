#!/usr/bin/env python3
"""Compare the classifier-based connectivity estimate with the Gaussian Bayes error."""

import argparse
import statistics
from collections import defaultdict

from connectlab.harness import ValidationConfig, run_connectivity_validation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=5, help="trials per separation")
    ap.add_argument("--out")
    args = ap.parse_args()

    rep = run_connectivity_validation(ValidationConfig(n_seeds=args.seeds), seed=args.seed)
    by_sep = defaultdict(list)
    for r in rep.tables["validation"]:
        by_sep[r["separation"]].append(r)
    print(f"{'sep':>5}  {'bayes':>7}  {'mean est':>8}  {'max |d|':>7}")
    for sep, rows in by_sep.items():
        est = statistics.fmean(r["estimate"] for r in rows)
        print(f"{sep:5.1f}  {rows[0]['bayes_error']:7.4f}  {est:8.4f}  {max(r['abs_delta'] for r in rows):7.4f}")
    print(f"flagged runs: {rep.metrics['n_flagged']}")
    if args.out:
        rep.write(args.out)


if __name__ == "__main__":
    main()
