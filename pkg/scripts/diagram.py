"""Grow the best column at one D and draw its phyllotactic diagram."""

import argparse
from dataclasses import replace

from cylpack.analysis import detect_periodicity, label_column, phyllotactic_points
from cylpack.density import CLASSIFY_LENGTH, desk_grid, sweep_templates
from cylpack.deposition import DepositionConfig, run_deposition
from cylpack.io import render_diagram


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=float, default=2.04)
    ap.add_argument("--svg", default="diagram.svg")
    args = ap.parse_args()
    cfg = DepositionConfig(cross_check=False)
    rec = sweep_templates(args.d, desk_grid(), cfg)
    col = run_deposition(args.d, rec.best_params, replace(cfg, target_length=CLASSIFY_LENGTH))
    period = detect_periodicity(col)
    with open(args.svg, "w") as fh:
        fh.write(render_diagram(phyllotactic_points(col), args.d, period))
    print(f"D = {args.d}: {label_column(col)}, vf = {rec.vf_max:.6f}, wrote {args.svg}")


if __name__ == "__main__":
    main()
