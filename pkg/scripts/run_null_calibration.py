#!/usr/bin/env python3
"""Null calibration benchmark: no planted effects, confounders active.
Reports per-cell rejection rates and permutation p-value uniformity."""

import argparse
import json

from slate_lens.experiments import null_calibration


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=500)
    parser.add_argument("--submissions", type=int, default=300)
    parser.add_argument("--reviewers", type=int, default=60)
    parser.add_argument("--permutations", type=int, default=500)
    parser.add_argument("--out", help="write the full JSON result here")
    args = parser.parse_args()

    result = null_calibration(
        n_seeds=args.seeds,
        n_submissions=args.submissions,
        n_reviewers=args.reviewers,
        permutations=args.permutations,
    )
    if args.out:
        with open(args.out, "w") as f:
            json.dump(result, f, indent=2, default=float)
    print(f"max per-cell rejection rate: {result['max_rejection_rate']:.4f}")
    print(f"min KS p: {result['min_ks_p']:.4f} "
          f"(Bonferroni floor {result['ks_alpha_bonferroni']:.6f})")
    print(f"audit violations: {result['total_audit_violations']}")
    print(f"cell failures: {result['cell_failures']}")
    print(f"runtime: {result['runtime_s']:.1f}s")


if __name__ == "__main__":
    main()
