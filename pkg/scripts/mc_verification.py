"""Empirical size and power of the maxmin tests at their least favorable tangents."""

import argparse
import sys
import time
from dataclasses import replace

from robsemi.model import normal_location_model
from robsemi.montecarlo import DEFAULT_N, DEFAULT_REPS, empirical_test, write_results_csv
from robsemi.testing import HypothesisSpec, maxmin_test


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r0", type=float, default=0.1)
    ap.add_argument("--r1", type=float, default=0.05)
    ap.add_argument("--n", type=int, default=DEFAULT_N)
    ap.add_argument("--reps", type=int, default=DEFAULT_REPS)
    ap.add_argument("--seed", type=int, default=20240915)
    args = ap.parse_args()

    model = normal_location_model()
    t0 = time.perf_counter()
    rows = []
    for kind in ("h", "v", "c"):
        design = maxmin_test(model, HypothesisSpec(kind, args.r0 / 2 if kind == "h" else args.r0, args.r1))
        size, power = empirical_test(design, model, n=args.n, reps=args.reps, seed=args.seed)
        for res in (size, power):
            rows.append(replace(res, quantity=f"{kind}-{res.quantity}"))
    write_results_csv(rows, sys.stdout)
    print(f"{time.perf_counter() - t0:.1f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
