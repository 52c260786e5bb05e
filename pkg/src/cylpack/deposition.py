"""Template construction and greedy lowest-site sequential deposition."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .geometry import (
    CONTACT_TOL,
    SurfaceSite,
    angular_window,
    check_ratio,
    contact_offset,
)

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class InvalidTemplate(ValueError):
    """The seed offsets do not produce a usable template."""


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class TemplateParams:
    dphi21: float
    dz21: float | None = None
    direction: int = 1

    def __post_init__(self):
        if not (0.0 <= self.dphi21 <= math.pi):
            raise ParameterError(f"dphi21={self.dphi21} outside [0, pi]")
        if self.dz21 is not None and not (0.0 <= self.dz21 <= 1.0):
            raise ParameterError(f"dz21={self.dz21} outside [0, 1]")
        if self.direction not in (1, -1):
            raise ParameterError("direction must be +1 or -1")


@dataclass(frozen=True)
class DepositionConfig:
    target_length: float = 20.0
    scan_grid: int = 4096
    contact_tol: float = CONTACT_TOL
    degeneracy_tol: float = 1e-9
    group_size: int = 1
    max_template_sites: int = 64
    # brute-force grid scan after every exact step; off inside sweeps for speed
    cross_check: bool = True

    def __post_init__(self):
        if self.target_length < 10.0:
            raise ParameterError("target_length must be at least 10 diameters")
        if self.scan_grid < 256:
            raise ParameterError("scan_grid must be at least 256")
        if self.group_size not in (1, 2, 3, 4):
            raise ParameterError("group_size must be 1, 2, 3 or 4")
        if self.max_template_sites < 1:
            raise ParameterError("max_template_sites must be positive")


@dataclass
class Column:
    """Deposition record for one diameter ratio and template.

    Angles are kept direction-normalised in ``psi``; the physical unwrapped
    azimuth is ``direction * psi``.
    """

    ratio: float
    direction: int
    template_len: int
    psi: np.ndarray
    z: np.ndarray
    params: TemplateParams | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.z)

    @property
    def angles(self) -> np.ndarray:
        return self.direction * self.psi

    @property
    def sites(self) -> list[SurfaceSite]:
        return [SurfaceSite(i, float(p), float(z))
                for i, (p, z) in enumerate(zip(self.angles, self.z))]

    @classmethod
    def from_sites(cls, ratio, direction, template_len, angles, axial, params=None):
        angles = np.asarray(angles, dtype=float)
        return cls(check_ratio(ratio), int(direction), int(template_len),
                   direction * angles, np.asarray(axial, dtype=float).copy(),
                   params)

    def extended(self, sites) -> "Column":
        ang = [s.angle for s in sites]
        ax = [s.axial for s in sites]
        return Column(self.ratio, self.direction, self.template_len,
                      np.concatenate([self.psi, self.direction * np.asarray(ang, float)]),
                      np.concatenate([self.z, np.asarray(ax, float)]),
                      self.params)

    def mirrored(self) -> "Column":
        return Column(self.ratio, -self.direction, self.template_len,
                      self.psi.copy(), self.z.copy(), self.params)

    @property
    def post_template_extent(self) -> float:
        tail = self.z[self.template_len:]
        return float(tail.max() - tail.min()) if len(tail) else 0.0


def _covers(psi: np.ndarray, c: float, W: float) -> bool:
    idx = np.arange(len(psi), dtype=np.int64)
    return bool(_kernel.covers(psi, idx, len(psi), c, W))


def _min_pair_distance(D, psi, z):
    c = D - 1.0
    best = math.inf
    for i in range(len(z)):
        dz = z[i + 1:] - z[i]
        ch = c * np.sin(0.5 * (psi[i + 1:] - psi[i]))
        if len(dz):
            best = min(best, float(np.sqrt(dz * dz + ch * ch).min()))
    return best


def build_template(D: float, params: TemplateParams, cfg: DepositionConfig | None = None) -> Column:
    """Seed spheres placed at multiples of dphi21 until their contact windows
    cover the circle.

    Raises InvalidTemplate when coverage is not reached within
    ``cfg.max_template_sites`` spheres.
    """
    cfg = cfg or DepositionConfig()
    D = check_ratio(D)
    c = D - 1.0
    W = angular_window(D)

    psi = [0.0]
    z = [0.0]
    dz2 = None
    # the two seed spheres are always placed
    while len(psi) < 2 or not _covers(np.array(psi), c, W):
        N = len(psi) + 1
        if N > cfg.max_template_sites:
            raise InvalidTemplate(
                f"template did not cover the circle within {cfg.max_template_sites} sites")
        ang = (N - 1) * params.dphi21
        if N == 2:
            h = contact_offset(D, params.dphi21)
            if h is not None:
                zn = h
            elif params.dz21 is None:
                raise ParameterError(
                    f"no contact at dphi21={params.dphi21} for D={D}; dz21 is required")
            else:
                zn = params.dz21
            dz2 = zn
        else:
            zn = _kernel.support_all(np.array(psi), np.array(z), len(psi), c, ang)
            if zn == -np.inf:
                zn = (N - 1) * dz2
        psi.append(ang)
        z.append(float(zn))

    psi = np.array(psi)
    z = np.array(z)
    if len(z) > 1 and _min_pair_distance(D, psi, z) < 1.0 - cfg.contact_tol:
        raise InvalidTemplate("template spheres overlap")
    return Column(D, params.direction, len(z), psi, z, params)


def support_height(col: Column, phi: float) -> float | None:
    """Lowest height at angle ``phi`` touching the column from above, or None
    if no site lies within the contact window."""
    v = _kernel.support_all(col.psi, col.z, len(col.z), col.ratio - 1.0,
                            col.direction * phi)
    return None if v == -np.inf else float(v)


def _ring(col: Column, cfg: DepositionConfig, u: int) -> tuple[float, float]:
    x, v, fixed = _kernel.ring_offset(col.psi, col.z, len(col.z), col.psi[-1],
                                      col.ratio - 1.0, angular_window(col.ratio),
                                      cfg.degeneracy_tol, u, cfg.scan_grid,
                                      cfg.cross_check)
    if math.isnan(x):
        raise RuntimeError("no deposition candidate; column does not cover the circle")
    if fixed:
        log.warning("grid scan found a lower site than the candidate search; using it")
    return x, v


def deposit_next(col: Column, cfg: DepositionConfig | None = None) -> SurfaceSite:
    cfg = cfg or DepositionConfig()
    x, v = _ring(col, cfg, 1)
    return SurfaceSite(len(col.z), col.direction * x, v)


def deposit_group(col: Column, cfg: DepositionConfig) -> list[SurfaceSite]:
    """Deposit ``cfg.group_size`` spheres at equal angular spacing.

    The ring offset minimises the highest support met by any member; members
    then drop one after another, each onto the column plus the members
    before it, so they need not share a height. With one member this is
    deposit_next.
    """
    u = cfg.group_size
    x, v = _ring(col, cfg, u)
    if u == 1:
        return [SurfaceSite(len(col.z), col.direction * x, v)]
    psi, z = col.psi, col.z
    c = col.ratio - 1.0
    out = []
    for k in range(u):
        xk = x + k * TWO_PI / u
        vk = _kernel.support_all(psi, z, len(z), c, xk)
        out.append(SurfaceSite(len(z), col.direction * xk, float(vk)))
        psi = np.append(psi, xk)
        z = np.append(z, vk)
    return out


def run_deposition(D: float, params: TemplateParams, cfg: DepositionConfig | None = None) -> Column:
    cfg = cfg or DepositionConfig()
    tmpl = build_template(D, params, cfg)
    c = tmpl.ratio - 1.0
    W = angular_window(tmpl.ratio)
    nt = len(tmpl.z)
    cap = nt + int((cfg.target_length + 4.0) * (1.2 * D * D + 2.0)) + cfg.group_size
    psi = np.empty(cap)
    z = np.empty(cap)
    psi[:nt] = tmpl.psi
    z[:nt] = tmpl.z
    n = nt
    while True:
        n, status, fixed = _kernel.grow(psi, z, n, nt, float(cfg.target_length), c, W,
                                        cfg.degeneracy_tol, cfg.group_size,
                                        cfg.scan_grid, cfg.cross_check)
        if fixed:
            log.warning("grid cross-check corrected %d steps at D=%.6f", fixed, D)
        if status == 0:
            break
        if status == 1:
            psi = np.concatenate([psi, np.empty(cap)])
            z = np.concatenate([z, np.empty(cap)])
            continue
        raise RuntimeError("deposition stalled: no candidate site")
    return Column(tmpl.ratio, params.direction, nt, psi[:n].copy(), z[:n].copy(), params)
