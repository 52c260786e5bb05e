"""Best structure and volume fraction for D in (1, 2] on the full template grid."""

import argparse

from cylpack.density import SweepGrid, sweep_templates
from cylpack.deposition import DepositionConfig

DEFAULT_DS = [1.0, 1.2, 1.5, 1.8, 1.86, 1.864, 1.866, 1.868, 1.87, 1.94,
              1.988, 1.99, 1.992, 1.998, 2.0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("ds", nargs="*", type=float, default=DEFAULT_DS)
    args = ap.parse_args()
    cfg = DepositionConfig(cross_check=False)
    print(f"{'D':>7}  {'vf_max':>10}  label")
    for D in args.ds:
        rec = sweep_templates(D, SweepGrid(), cfg, classify=True)
        print(f"{D:7.3f}  {rec.vf_max:10.6f}  {rec.label}")


if __name__ == "__main__":
    main()
