"""Volume fraction when u spheres are placed per step, against the u = 1 optimum."""

import argparse
from dataclasses import replace

from cylpack.density import desk_grid, sweep_templates
from cylpack.deposition import DepositionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=float, nargs="+", default=[2.05, 2.1, 2.2, 2.3])
    ap.add_argument("--max-u", type=int, default=4)
    args = ap.parse_args()
    cfg = DepositionConfig(cross_check=False)
    print("D      " + "  ".join(f"u={u:<8d}" for u in range(1, args.max_u + 1)))
    for D in args.d:
        vals = [sweep_templates(D, desk_grid(), replace(cfg, group_size=u)).vf_max
                for u in range(1, args.max_u + 1)]
        print(f"{D:.3f}  " + "  ".join(f"{v:.6f}" for v in vals))


if __name__ == "__main__":
    main()
