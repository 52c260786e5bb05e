"""Column files, results CSV, run manifests, checkpoints, reference
comparison and phyllotactic diagrams."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import HelicalPeriod, PhyllotacticPoint, boundary_curve
from .deposition import Column, TemplateParams
from .density import BULK_LIMIT, SweepRecord
from .geometry import check_ratio, period_length


class ColumnFormatError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class CompareError(ValueError):
    pass


# ---------------------------------------------------------------------------
# column files


def write_column(col: Column, path) -> None:
    lines = [f"# d={col.ratio!r}", f"# direction={col.direction:+d}",
             f"# template_len={col.template_len}"]
    for i, (p, z) in enumerate(zip(col.angles, col.z)):
        lines.append(f"{i},{float(p):.17g},{float(z):.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_column(path) -> Column:
    header: dict[str, str] = {}
    idx, phi, z = [], [], []
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if idx:
                    raise ColumnFormatError("header after data rows", ln)
                key, sep, val = line[1:].strip().partition("=")
                if not sep:
                    raise ColumnFormatError(f"malformed header {line!r}", ln)
                header[key.strip()] = val.strip()
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ColumnFormatError(f"expected 3 fields, got {len(parts)}", ln)
            try:
                i, p, zz = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ColumnFormatError(str(exc), ln) from None
            if i != len(idx):
                raise ColumnFormatError(f"index {i} out of sequence (expected {len(idx)})", ln)
            idx.append(i)
            phi.append(p)
            z.append(zz)
    for key in ("d", "direction", "template_len"):
        if key not in header:
            raise ColumnFormatError(f"missing header '# {key}=' (required)")
    try:
        D = float(header["d"])
        direction = int(header["direction"])
        tl = int(header["template_len"])
    except ValueError as exc:
        raise ColumnFormatError(f"bad header value: {exc}") from None
    if direction not in (1, -1):
        raise ColumnFormatError("direction must be +1 or -1")
    if not idx:
        raise ColumnFormatError("no site rows")
    if not 0 <= tl <= len(idx):
        raise ColumnFormatError("template_len exceeds the number of sites")
    return Column.from_sites(D, direction, tl, phi, z)


# ---------------------------------------------------------------------------
# results CSV

RESULT_FIELDS = ["d", "vf_max", "dphi21", "dz21", "direction", "label",
                 "l", "m", "n", "transient_len"]


@dataclass(frozen=True)
class ResultRow:
    d: float
    vf_max: float
    dphi21: float | None
    dz21: float | None
    direction: int | None
    label: str
    l: int | None = None
    m: int | None = None
    n: int | None = None
    transient_len: int | None = None

    @classmethod
    def from_record(cls, rec: SweepRecord) -> "ResultRow":
        p = rec.best_params
        lab = rec.label
        lmn = getattr(lab, "lmn", None) or (None, None, None)
        if rec.error:
            text = "error: " + rec.error
        else:
            text = str(lab) if lab is not None else ""
        return cls(rec.ratio, rec.vf_max,
                   p.dphi21 if p else None, p.dz21 if p else None,
                   p.direction if p else None, text, *lmn,
                   getattr(lab, "transient_len", None))

    def params(self) -> TemplateParams | None:
        if self.dphi21 is None:
            return None
        return TemplateParams(self.dphi21, self.dz21, self.direction or 1)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _opt(conv, s):
    return None if s == "" else conv(s)


def write_results(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in RESULT_FIELDS])


def _row_from_dict(rec: dict, ln: int) -> ResultRow:
    try:
        return ResultRow(float(rec["d"]), float(rec["vf_max"]),
                         _opt(float, rec["dphi21"]), _opt(float, rec["dz21"]),
                         _opt(int, rec["direction"]), rec["label"],
                         _opt(int, rec["l"]), _opt(int, rec["m"]), _opt(int, rec["n"]),
                         _opt(int, rec["transient_len"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ColumnFormatError(f"bad results row: {exc}", ln) from None


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_FIELDS:
            raise ColumnFormatError(f"unexpected header {reader.fieldnames}", 1)
        return [_row_from_dict(rec, ln) for ln, rec in enumerate(reader, 2)]


# ---------------------------------------------------------------------------
# manifest and checkpoint


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


@dataclass
class RunManifest:
    config: dict
    version: str = __version__
    timestamp: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    runtimes: dict[str, float] = field(default_factory=dict)

    @classmethod
    def for_sweep(cls, d_lo, d_hi, step, grid, cfg, **extra) -> "RunManifest":
        conf = {"d_lo": d_lo, "d_hi": d_hi, "step": step,
                "grid": _plain(grid), "deposition": _plain(cfg),
                "tie_break": "vf within 1e-9 -> smallest (dphi21, dz21); scan ties -> first from phi_prev"}
        conf.update(extra)
        return cls(conf)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        return cls(data["config"], data["version"], data["timestamp"], data.get("runtimes", {}))


class Checkpoint:
    """Results CSV plus a manifest beside it; rows are appended and flushed
    one D sample at a time by a single writer."""

    def __init__(self, path, manifest: RunManifest):
        self.path = Path(path)
        self.manifest_path = self.path.with_name(self.path.name + ".manifest.json")
        self.manifest = manifest

    def existing(self) -> list[ResultRow]:
        if not self.path.exists():
            return []
        if self.manifest_path.exists():
            old = RunManifest.from_json(self.manifest_path.read_text())
            if old.config != self.manifest.config:
                raise CompareError("checkpoint was written with a different configuration")
            self.manifest.runtimes.update(old.runtimes)
        return read_results(self.path)

    def start(self, resume: bool) -> list[ResultRow]:
        rows = self.existing() if resume else []
        with open(self.path, "w", newline="") as fh:
            write_results(rows, fh)
        self._save_manifest()
        return rows

    def append(self, rec: SweepRecord) -> None:
        row = ResultRow.from_record(rec)
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(
                [_fmt(getattr(row, f)) for f in RESULT_FIELDS])
            fh.flush()
            os.fsync(fh.fileno())
        self.manifest.runtimes[repr(rec.ratio)] = rec.runtime
        self._save_manifest()

    def _save_manifest(self):
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text(self.manifest.to_json())
        os.replace(tmp, self.manifest_path)


# ---------------------------------------------------------------------------
# reference comparison


@dataclass(frozen=True)
class CompareReport:
    deltas: list[tuple[float, float]]  # (d, ours - reference)
    max_abs: float
    mean_abs: float
    n_over: int
    tol: float
    transition_ds: list[float]  # D samples next to a label change
    over_near_transition: int

    def summary(self) -> str:
        return (f"compared {len(self.deltas)} points: max |dVF| = {self.max_abs:.3e}, "
                f"mean |dVF| = {self.mean_abs:.3e}, {self.n_over} above {self.tol:g} "
                f"({self.over_near_transition} of them next to a structure change)")


def read_reference(path) -> list[tuple[float, float]]:
    """Two-column CSV (d, vf); a header row is optional."""
    out = []
    with open(path, newline="") as fh:
        for ln, rec in enumerate(csv.reader(fh), 1):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                d, vf = float(rec[0]), float(rec[1])
            except (ValueError, IndexError):
                if ln == 1:
                    continue
                raise ColumnFormatError(f"bad reference row {rec}", ln) from None
            if out and d <= out[-1][0]:
                raise ColumnFormatError("reference D values must increase strictly", ln)
            if not 0.0 < vf < BULK_LIMIT:
                raise ColumnFormatError(f"reference vf {vf} outside (0, {BULK_LIMIT})", ln)
            out.append((d, vf))
    return out


def compare_reference(ours, reference, tol: float = 1e-3) -> CompareReport:
    """Compare our (d, vf[, label]) curve against a reference (d, vf) curve.

    The reference is interpolated linearly at our D samples inside its range.
    """
    ours = sorted(ours, key=lambda r: r[0])
    ref = sorted(reference)
    if not ours or not ref:
        raise CompareError("empty curve")
    rd = np.array([r[0] for r in ref])
    rv = np.array([r[1] for r in ref])
    inside = [r for r in ours if rd[0] - 1e-12 <= r[0] <= rd[-1] + 1e-12 and not math.isnan(r[1])]
    if not inside:
        raise CompareError("D ranges do not overlap")
    deltas = [(r[0], float(r[1] - np.interp(r[0], rd, rv))) for r in inside]
    mags = np.abs([d for _, d in deltas])

    labels = [r[2] if len(r) > 2 else None for r in inside]
    near: set[int] = set()
    for i in range(1, len(inside)):
        if labels[i] is not None and labels[i] != labels[i - 1]:
            near.update({i - 1, i})
    trans = [inside[i][0] for i in sorted(near)]
    over = [i for i, m in enumerate(mags) if m > tol]
    return CompareReport(deltas, float(mags.max()), float(mags.mean()), len(over), tol,
                         trans, sum(1 for i in over if i in near))


# ---------------------------------------------------------------------------
# diagrams

_SCALE = 60.0
_MARGIN = 50.0


def _n(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def diagram_csv(points, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["s", "z"])
    for p in points:
        w.writerow([repr(p.s), repr(p.z)])


def render_diagram(points: list[PhyllotacticPoint], D: float,
                   period: HelicalPeriod | None = None, boundaries: bool = True) -> str:
    """SVG of z against s over one period |V| = (D-1)pi.

    Output depends only on the inputs. Without a period the points are still
    drawn, under a warning line.
    """
    if not points:
        raise ValueError("no points to draw")
    D = check_ratio(D)
    V = period_length(D)
    zs = [p.z for p in points]
    z0, z1 = min(zs) - 0.6, max(zs) + 0.6
    width = max(V, 1.0) * _SCALE + 2 * _MARGIN
    height = (z1 - z0) * _SCALE + 2 * _MARGIN + 30.0

    def X(s):
        return _MARGIN + s * _SCALE

    def Y(z):
        return _MARGIN + (z1 - z) * _SCALE

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{_n(width)}" height="{_n(height)}" viewBox="0 0 {_n(width)} {_n(height)}">',
           '<defs><clipPath id="period"><rect x="%s" y="%s" width="%s" height="%s"/></clipPath>'
           '<marker id="head" markerWidth="8" markerHeight="8" refX="8" refY="4" orient="auto">'
           '<path d="M0,0 L8,4 L0,8 z"/></marker></defs>'
           % (_n(X(0)), _n(Y(z1)), _n(V * _SCALE), _n((z1 - z0) * _SCALE)),
           f'<rect x="{_n(X(0))}" y="{_n(Y(z1))}" width="{_n(V * _SCALE)}" '
           f'height="{_n((z1 - z0) * _SCALE)}" fill="none" stroke="#999"/>']
    if period is None:
        out.append(f'<text x="{_n(_MARGIN)}" y="20" font-size="14" fill="#b00">'
                   'warning: no helical period detected</text>')
    if boundaries and V > 0:
        out.append('<g clip-path="url(#period)" fill="none" stroke="#4a7" stroke-width="1">')
        for p in points:
            for shift in (-V, 0.0, V):
                curve = boundary_curve(D, p.s + shift, p.z, samples=61)
                if curve[:, 0].max() < 0 or curve[:, 0].min() > V:
                    continue
                pts = " ".join(f"{_n(X(a))},{_n(Y(b))}" for a, b in curve)
                out.append(f'<polyline points="{pts}"/>')
        out.append("</g>")
    out.append('<g fill="#124">')
    for p in points:
        out.append(f'<circle cx="{_n(X(p.s))}" cy="{_n(Y(p.z))}" r="3"/>')
    out.append("</g>")
    ya = Y(z0) + 20.0
    out.append(f'<line x1="{_n(X(0))}" y1="{_n(ya)}" x2="{_n(X(V))}" y2="{_n(ya)}" '
               'stroke="#000" stroke-width="2" marker-end="url(#head)"/>')
    out.append(f'<text x="{_n(X(V / 2))}" y="{_n(ya + 18)}" font-size="12" '
               f'text-anchor="middle">|V| = {V:.5f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
