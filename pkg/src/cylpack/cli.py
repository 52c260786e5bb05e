"""Command-line entry point: ``cylpack <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .analysis import (
    contact_graph,
    detect_periodicity,
    label_column,
    phyllotactic_points,
)
from .deposition import (
    DepositionConfig,
    InvalidTemplate,
    ParameterError,
    TemplateParams,
    run_deposition,
)
from .density import (
    SweepFailure,
    SweepGrid,
    desk_grid,
    fit_number_density,
    sweep_diameter,
    sweep_templates,
)
from .geometry import DomainError, check_ratio, contact_offset
from .io import (
    Checkpoint,
    ColumnFormatError,
    CompareError,
    ResultRow,
    RunManifest,
    compare_reference,
    diagram_csv,
    read_column,
    read_reference,
    read_results,
    render_diagram,
    write_column,
    write_results,
)

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _grid(args) -> SweepGrid:
    if args.desk:
        return desk_grid()
    return SweepGrid(args.dphi_steps, args.dz_steps, args.refine_rounds)


def _add_grid(p):
    p.add_argument("--dphi-steps", type=int, default=1571)
    p.add_argument("--dz-steps", type=int, default=101)
    p.add_argument("--refine-rounds", type=int, default=3)
    p.add_argument("--desk", action="store_true",
                   help="coarse 158x11 grid for quick full-range curves")
    p.add_argument("--length", type=float, default=20.0)


def _out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def cmd_deposit(args):
    D = check_ratio(args.d)
    dz = args.dz21
    if dz is not None and contact_offset(D, args.dphi21) is not None:
        dz = None  # computed from the contact equation
    params = TemplateParams(args.dphi21, dz, args.direction)
    cfg = DepositionConfig(target_length=args.length, group_size=args.group_size)
    col = run_deposition(D, params, cfg)
    write_column(col, args.out)
    est = fit_number_density(col)
    print(f"{len(col)} sites, template {col.template_len}, vf = {est.vf:.10f}", file=sys.stderr)


def cmd_sweep_templates(args):
    cfg = DepositionConfig(target_length=args.length, cross_check=False)
    rec = sweep_templates(args.d, _grid(args), cfg, classify=True)
    fh = _out(args.out)
    write_results([ResultRow.from_record(rec)], fh)
    if fh is not sys.stdout:
        fh.close()


def cmd_sweep_d(args):
    if args.d_hi < args.d_lo:
        raise DomainError("--d-hi must not be below --d-lo")
    grid = _grid(args)
    cfg = DepositionConfig(target_length=args.length, cross_check=False)
    manifest = RunManifest.for_sweep(args.d_lo, args.d_hi, args.step, grid, cfg)
    done_rows = []
    sink = None
    if args.checkpoint:
        ck = Checkpoint(args.checkpoint, manifest)
        done_rows = ck.start(args.resume)
        sink = ck.append
    elif args.resume:
        raise DomainError("--resume needs --checkpoint")
    recs = sweep_diameter(args.d_lo, args.d_hi, args.step, grid, cfg, classify=True,
                          done=[r.d for r in done_rows], on_record=sink,
                          workers=args.workers)
    rows = sorted(done_rows + [ResultRow.from_record(r) for r in recs], key=lambda r: r.d)
    if args.out or not args.checkpoint:
        fh = _out(args.out)
        write_results(rows, fh)
        if fh is not sys.stdout:
            fh.close()
    print(f"{len(recs)} new samples, {len(done_rows)} resumed", file=sys.stderr)


def cmd_classify(args):
    col = read_column(args.inp)
    label = label_column(col)
    g = contact_graph(col)
    print(f"label: {label}")
    if label.lmn:
        print("lmn: %d %d %d" % label.lmn)
    if label.slip:
        print("slip directions: " + ",".join(map(str, label.slip)))
    print(f"transient_len: {label.transient_len}")
    print(f"coordination histogram: {g.histogram()}")


def cmd_diagram(args):
    if not (args.svg or args.csv):
        raise DomainError("give --svg and/or --csv")
    col = read_column(args.inp)
    pts = phyllotactic_points(col)
    try:
        period = detect_periodicity(col)
    except ValueError:
        period = None
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_diagram(pts, col.ratio, period))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            diagram_csv(pts, fh)


def cmd_compare(args):
    ours = [(r.d, r.vf_max, r.label) for r in read_results(args.ours)]
    ref = read_reference(args.reference)
    rep = compare_reference(ours, ref, args.tolerance)
    print(rep.summary())
    print(f"max_abs_delta={rep.max_abs:.6e}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cylpack", description="Densest sphere packings on a cylinder wall "
                "by sequential deposition.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("deposit", help="grow one column")
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--dphi21", type=float, required=True)
    s.add_argument("--dz21", type=float)
    s.add_argument("--direction", type=int, default=1, choices=(1, -1))
    s.add_argument("--length", type=float, default=20.0)
    s.add_argument("--group-size", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_deposit)

    s = sub.add_parser("sweep-templates", help="best template at one D")
    s.add_argument("--d", type=float, required=True)
    _add_grid(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep_templates)

    s = sub.add_parser("sweep-d", help="maximum volume fraction against D")
    s.add_argument("--d-lo", type=float, required=True)
    s.add_argument("--d-hi", type=float, required=True)
    s.add_argument("--step", type=float, default=0.001)
    _add_grid(s)
    s.add_argument("--checkpoint")
    s.add_argument("--resume", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep_d)

    s = sub.add_parser("classify", help="label a column file")
    s.add_argument("--in", dest="inp", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("diagram", help="phyllotactic diagram of a column file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--svg")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_diagram)

    s = sub.add_parser("compare", help="compare a results CSV with a reference curve")
    s.add_argument("--ours", required=True)
    s.add_argument("--reference", required=True)
    s.add_argument("--tolerance", type=float, default=1e-3)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ColumnFormatError) as exc:
        print(f"cylpack: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ParameterError, InvalidTemplate, SweepFailure, CompareError,
            ValueError) as exc:
        print(f"cylpack: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
