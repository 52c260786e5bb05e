"""Symmetric structures and line slips between D = 2.0 and 2.2."""

import argparse

from cylpack.analysis import symmetric_table
from cylpack.density import SweepGrid, desk_grid, sweep_templates
from cylpack.deposition import DepositionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("ds", nargs="*", type=float,
                    default=[2.02, 2.04, 2.06, 2.08, 2.1, 2.12, 2.148, 2.155, 2.2])
    ap.add_argument("--desk", action="store_true", help="coarse grid; misses thin optima")
    args = ap.parse_args()

    print("exact ratios of the symmetric structures:")
    for D, lmn in symmetric_table():
        print("  (%d,%d,%d)  D = %.6f" % (*lmn, D))
    grid = desk_grid() if args.desk else SweepGrid()
    cfg = DepositionConfig(cross_check=False)
    for D in args.ds:
        rec = sweep_templates(D, grid, cfg, classify=True)
        extra = " (loose period)" if rec.label.loose_period else ""
        print(f"{D:6.3f}  {rec.vf_max:.6f}  {rec.label}{extra}")


if __name__ == "__main__":
    main()
