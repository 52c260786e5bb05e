"""Number-density fits, volume fractions and template / diameter sweeps."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .deposition import (
    Column,
    DepositionConfig,
    InvalidTemplate,
    TemplateParams,
    run_deposition,
)
from .geometry import D_MAX, check_ratio, contact_offset

log = logging.getLogger(__name__)

BULK_LIMIT = 0.74048  # FCC/HCP volume fraction
TRANSIENT_FRACTION = 0.3
# long transients (periodicity breaking) need a longer column to expose the tail
CLASSIFY_LENGTH = 40.0


class InsufficientData(ValueError):
    pass


class SweepFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class DensityEstimate:
    slope: float
    vf: float
    residual: float
    fit_window: tuple[float, float]


@dataclass(frozen=True)
class SweepGrid:
    dphi_steps: int = 1571
    dz_steps: int = 101
    refine_rounds: int = 3

    def __post_init__(self):
        if self.dphi_steps < 2 or self.dz_steps < 2 or self.refine_rounds < 0:
            raise ValueError("grid counts must be >= 2 and refine_rounds >= 0")


@dataclass
class SweepRecord:
    ratio: float
    best_params: TemplateParams | None
    vf_max: float
    label: object = None
    runtime: float = 0.0
    estimate: DensityEstimate | None = field(default=None, repr=False)
    n_evaluated: int = 0
    error: str | None = None


def volume_fraction(D: float, slope: float) -> float:
    if not slope > 0.0:
        raise ValueError("number density must be positive")
    return 2.0 * slope / (3.0 * D * D)


def fit_number_density(col: Column, cfg: DepositionConfig | None = None) -> DensityEstimate:
    """Fit rank against height over the settled part of the column.

    Template sites are dropped, the lowest 30% of the remaining axial extent
    is treated as transient, and the topmost level is dropped because it may
    be only partly filled. The fit is a sin^2-tapered least-squares line: with
    a taper vanishing at both window ends, periodic departures from the line
    average out instead of biasing the slope through the window edges.
    """
    z = np.sort(col.z[col.template_len:])
    if len(z) < 2:
        raise InsufficientData("no post-template sites")
    rank = np.arange(len(z), dtype=float)
    z_lo = z[0] + TRANSIENT_FRACTION * (z[-1] - z[0])
    keep = (z >= z_lo) & (z < z[-1] - 1e-9)
    zz, nn = z[keep], rank[keep]
    if len(zz) < 10:
        raise InsufficientData(f"only {len(zz)} sites in the fit window")
    span = zz[-1] - zz[0]
    w = np.sin(np.pi * (zz - zz[0]) / span) ** 2
    zm = np.dot(w, zz) / w.sum()
    nm = np.dot(w, nn) / w.sum()
    slope = np.dot(w, (zz - zm) * (nn - nm)) / np.dot(w, (zz - zm) ** 2)
    resid = float(np.abs(nn - (nm + slope * (zz - zm))).max())
    slope = float(slope)
    return DensityEstimate(slope, volume_fraction(col.ratio, slope), resid,
                           (float(zz[0]), float(zz[-1])))


def _evaluate(D, params, cfg):
    try:
        col = run_deposition(D, params, cfg)
        return fit_number_density(col, cfg)
    except (InvalidTemplate, InsufficientData):
        return None


def commensurate_angles(qmax: int = 12) -> list[float]:
    """Angles pi*p/q in [0, pi] with q <= qmax.

    Ring-like symmetric structures only grow from templates whose seed angle
    is an exact fraction of the circle; a uniform grid hits those by luck.
    """
    vals = {0.0, math.pi}
    for q in range(1, qmax + 1):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                vals.add(math.pi * p / q)
    return sorted(vals)


def _templates_at(D, dphi, dz_values):
    if contact_offset(D, dphi) is not None:
        return [TemplateParams(float(dphi))]
    return [TemplateParams(float(dphi), float(dz)) for dz in dz_values]


def _key(vf, p):
    # larger vf first; ties within 1e-9 resolved by the caller
    return (p.dphi21, -1.0 if p.dz21 is None else p.dz21)


def _better(vf, p, best_vf, best_p):
    if best_p is None:
        return True
    if vf > best_vf + 1e-9:
        return True
    if vf >= best_vf - 1e-9:
        return _key(vf, p) < _key(best_vf, best_p)
    return False


def sweep_templates(D: float, grid: SweepGrid | None = None,
                    cfg: DepositionConfig | None = None,
                    classify: bool = False) -> SweepRecord:
    """Best template at one diameter ratio: coarse grid then local refinement."""
    grid = grid or SweepGrid()
    cfg = cfg or DepositionConfig(cross_check=False)
    D = check_ratio(D)
    t0 = time.perf_counter()
    seen: dict[tuple, DensityEstimate | None] = {}

    def run(p):
        k = (p.dphi21, p.dz21)
        if k not in seen:
            seen[k] = _evaluate(D, p, cfg)
        return seen[k]

    best_vf, best_p, best_est = -math.inf, None, None

    def consider(cands):
        nonlocal best_vf, best_p, best_est
        for p in cands:
            est = run(p)
            if est is not None and _better(est.vf, p, best_vf, best_p):
                best_vf, best_p, best_est = est.vf, p, est

    dphis = np.union1d(np.linspace(0.0, math.pi, grid.dphi_steps),
                       commensurate_angles())
    dzs = np.linspace(0.0, 1.0, grid.dz_steps)
    for dphi in dphis:
        consider(_templates_at(D, dphi, dzs))
    if best_p is None:
        raise SweepFailure(f"every template invalid at D={D}")

    hphi = math.pi / (grid.dphi_steps - 1)
    hz = 1.0 / (grid.dz_steps - 1)
    for _ in range(grid.refine_rounds):
        hphi /= 10.0
        hz /= 10.0
        centre = best_p
        ph = [centre.dphi21 + k * hphi for k in range(-10, 11)]
        ph = [min(math.pi, max(0.0, x)) for x in ph]
        cands = []
        for x in dict.fromkeys(ph):
            if contact_offset(D, x) is not None:
                cands.append(TemplateParams(x))
            elif centre.dz21 is not None:
                zs = [min(1.0, max(0.0, centre.dz21 + k * hz)) for k in range(-10, 11)]
                cands.extend(TemplateParams(x, dz) for dz in dict.fromkeys(zs))
        consider(cands)

    rec = SweepRecord(D, best_p, best_vf, runtime=0.0, estimate=best_est,
                      n_evaluated=len(seen))
    if classify:
        from .analysis import label_column
        long_cfg = replace(cfg, target_length=max(cfg.target_length, CLASSIFY_LENGTH))
        rec.label = label_column(run_deposition(D, best_p, long_cfg))
    rec.runtime = time.perf_counter() - t0
    return rec


def diameter_samples(d_lo: float, d_hi: float, step: float = 0.001) -> list[float]:
    """Grid d_lo, d_lo+step, ... up to d_hi, with d_hi appended if off-grid."""
    if d_hi < d_lo or d_lo < 1.0 or d_hi > D_MAX:
        raise ValueError(f"bad diameter range [{d_lo}, {d_hi}]")
    if d_hi == d_lo:
        return []
    n = int(math.floor((d_hi - d_lo) / step + 1e-9))
    out = [round(d_lo + k * step, 10) for k in range(n + 1)]
    if d_hi - out[-1] > 1e-9:
        out.append(d_hi)
    return out


def _sweep_one(args):
    D, grid, cfg, classify = args
    try:
        return sweep_templates(D, grid, cfg, classify)
    except Exception as exc:  # recorded, not fatal to the sweep
        log.error("sweep failed at D=%s: %s", D, exc)
        return SweepRecord(D, None, math.nan, error=str(exc))


def sweep_diameter(d_lo: float, d_hi: float, step: float = 0.001,
                   grid: SweepGrid | None = None, cfg: DepositionConfig | None = None,
                   classify: bool = True, done: Iterable[float] = (),
                   on_record: Callable[[SweepRecord], None] | None = None,
                   workers: int = 1) -> list[SweepRecord]:
    """One template sweep per diameter sample.

    Samples listed in ``done`` (from a checkpoint) are skipped. Records are
    handed to ``on_record`` in increasing D regardless of completion order.
    """
    grid = grid or SweepGrid()
    cfg = cfg or DepositionConfig(cross_check=False)
    skip = {round(d, 10) for d in done}
    todo = [D for D in diameter_samples(d_lo, d_hi, step) if round(D, 10) not in skip]
    jobs = [(D, grid, cfg, classify) for D in todo]
    out = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = ex.map(_sweep_one, jobs)
            for rec in results:
                out.append(rec)
                if on_record:
                    on_record(rec)
    else:
        for job in jobs:
            rec = _sweep_one(job)
            out.append(rec)
            if on_record:
                on_record(rec)
    return out


def desk_grid() -> SweepGrid:
    """Coarser grid used for full-range curves on a single core."""
    return SweepGrid(dphi_steps=158, dz_steps=11, refine_rounds=3)


def with_target(cfg: DepositionConfig, target: float) -> DepositionConfig:
    return replace(cfg, target_length=target)
