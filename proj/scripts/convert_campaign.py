#!/usr/bin/env python3
"""Convert a measurement-campaign matrix layout into a huberloc bundle.

Input layout:
  coords  whitespace matrix, row k = "x y" of node k+1 in metres
  ranges  whitespace N x N matrix, entry (i, j) = measurement from node i+1
          to node j+1; the diagonal and non-finite entries are skipped
          (write NaN for missing pairs)

Both directions of a pair are written; `huberloc dataset` averages them
and warns when they disagree by more than 3 sigma_n.

Output: <out>/nodes.csv, <out>/ranges.csv, <out>/bundle.json
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT_M_PER_NS = 0.299792458


def parse_args(argv):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--coords", required=True, type=Path)
    p.add_argument("--ranges", required=True, type=Path)
    p.add_argument("--anchors", required=True, help="comma-separated 1-based node ids")
    p.add_argument("--avg-bias", required=True, type=float, help="average NLOS error of the campaign, metres")
    p.add_argument("--sigma-n", type=float, default=1.0, help="ranging noise std, metres (default 1.0)")
    p.add_argument("--unit", choices=["m", "ns"], default="m", help="unit of the range matrix")
    p.add_argument("--name", default="campaign")
    p.add_argument("--out", required=True, type=Path)
    return p.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    coords = np.loadtxt(args.coords, ndmin=2)
    ranges = np.loadtxt(args.ranges, ndmin=2)
    n = coords.shape[0]
    if coords.shape[1] != 2:
        sys.exit(f"{args.coords}: expected 2 columns, got {coords.shape[1]}")
    if ranges.shape != (n, n):
        sys.exit(f"{args.ranges}: expected a {n} x {n} matrix, got {ranges.shape[0]} x {ranges.shape[1]}")
    if args.avg_bias < 0 or args.sigma_n <= 0:
        sys.exit("--avg-bias must be >= 0 and --sigma-n > 0")
    anchors = {int(a) for a in args.anchors.split(",") if a.strip()}
    if not anchors or min(anchors) < 1 or max(anchors) > n:
        sys.exit(f"--anchors must name node ids between 1 and {n}")
    if args.unit == "ns":
        ranges = ranges * SPEED_OF_LIGHT_M_PER_NS

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "nodes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "x_m", "y_m", "role"])
        for k in range(n):
            role = "anchor" if k + 1 in anchors else "sensor"
            w.writerow([k + 1, repr(float(coords[k, 0])), repr(float(coords[k, 1])), role])

    written = 0
    with open(args.out / "ranges.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["i", "j", "range_m"])
        for i in range(n):
            for j in range(n):
                r = float(ranges[i, j])
                if i == j or not math.isfinite(r):
                    continue
                w.writerow([i + 1, j + 1, repr(r)])
                written += 1

    meta = {"name": args.name, "surrogate": False, "avg_bias_m": args.avg_bias, "sigma_n_m": args.sigma_n}
    (args.out / "bundle.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"{n} nodes ({len(anchors)} anchors), {written} directed ranges -> {args.out}")


if __name__ == "__main__":
    main()
