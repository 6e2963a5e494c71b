"""Tabulate beta(r), R(r) and relMSE(r) for the normal location model."""

import argparse
import sys
import time

from robsemi.model import normal_location_model
from robsemi.risk import default_grid, parse_grid, rel_mse, risk_curves, write_curves_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", default="0.005:0.395:200", help="a:b:N, or 'log' for the default grid")
    ap.add_argument("--output", "-o", help="CSV path (default: stdout)")
    args = ap.parse_args()

    model = normal_location_model()
    grid = default_grid(model) if args.grid == "log" else parse_grid(args.grid)
    t0 = time.perf_counter()
    pts = risk_curves(model, grid)
    best = min(pts, key=lambda p: p.beta)
    print(f"{len(pts)} radii in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    print(f"beta_min = {best.beta:.5f} at r = {best.r:.5f}", file=sys.stderr)
    print(f"relMSE: {pts[0].relMSE:.5f} at r = {pts[0].r:g}, {pts[-1].relMSE:.5f} at r = {pts[-1].r:g}, "
          f"{rel_mse(model, 0.39894):.5f} at the edge", file=sys.stderr)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_curves_csv(pts, fh)
    else:
        write_curves_csv(pts, sys.stdout)


if __name__ == "__main__":
    main()
