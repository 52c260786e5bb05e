"""Contact graphs, screw periodicity, structure labels and phyllotactic data."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.optimize import fsolve

from .deposition import Column
from .geometry import CONTACT_TOL, D_MAX, period_length

TWO_PI = 2.0 * math.pi

# near-contact tolerance for structural labels. Symmetric structures exist only
# at isolated ratios (321 at D=2.03923, 330 at D=2.15470); at the nearby
# sampled ratios the sixth neighbour sits a few 1e-4 to 1e-3 away.
STRUCT_TOL = 2.5e-3
# loose tolerance on per-step offsets when deciding helix-like labels
STEP_TOL = 1e-3
PERIOD_TOL = 1e-6
EDGE_MARGIN = 2.0
PI_IMAGE_TOL = 1e-7


@dataclass
class ContactGraph:
    adjacency: list[list[int]]
    tol: float

    @property
    def coordination(self) -> np.ndarray:
        """Distinct contacting neighbours per site."""
        return np.array([len(a) for a in self.adjacency], dtype=int)

    def histogram(self) -> dict[int, int]:
        vals, cnt = np.unique(self.coordination, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnt)}


@dataclass(frozen=True)
class HelicalPeriod:
    dphi_p: float
    dz_p: float
    sites_per_period: int
    residual: float
    transient_len: int


@dataclass(frozen=True)
class StructureLabel:
    kind: str  # SingleFile Zigzag SingleHelix DoubleHelix Doublets Symmetric LineSlip Unclassified
    lmn: tuple[int, int, int] | None = None
    lower: tuple[int, int, int] | None = None
    upper: tuple[int, int, int] | None = None
    slip: tuple[int, ...] | None = None
    slip_type: int | None = None
    period_vector: tuple[float, float] | None = None  # (s, z) of V
    v_residual: float | None = None
    transient_len: int | None = None
    # True when the tail repeats only within STRUCT_TOL, not PERIOD_TOL
    loose_period: bool = False

    def __str__(self):
        if self.kind == "Symmetric" and self.lmn:
            return "Symmetric(%d,%d,%d)" % self.lmn
        if self.kind == "LineSlip":
            t = f" type {self.slip_type}" if self.slip_type else ""
            lo = "".join(map(str, self.lower)) if self.lower else "?"
            hi = "".join(map(str, self.upper)) if self.upper else "?"
            return f"LineSlip({lo}-{hi}{t})"
        return self.kind


@dataclass(frozen=True)
class PhyllotacticPoint:
    s: float
    z: float


def _wrap(x):
    return np.remainder(np.asarray(x) + np.pi, TWO_PI) - np.pi


def _pairwise(col: Column):
    c = col.ratio - 1.0
    phi = col.angles
    z = col.z
    dphi = _wrap(phi[None, :] - phi[:, None])
    dz = z[None, :] - z[:, None]
    d = np.sqrt(dz * dz + (c * np.sin(0.5 * dphi)) ** 2)
    np.fill_diagonal(d, np.inf)
    return dphi, dz, d


def contact_graph(col: Column, tol: float = CONTACT_TOL) -> ContactGraph:
    """Pairs at centre distance 1 within tol; candidates come from a z-sorted
    window of height 1, so each site only looks at its axial neighbourhood."""
    n = len(col)
    order = np.argsort(col.z, kind="stable")
    zs = col.z[order]
    c = col.ratio - 1.0
    phi = col.angles
    adj: list[list[int]] = [[] for _ in range(n)]
    for a in range(n):
        i = order[a]
        hi = np.searchsorted(zs, zs[a] + 1.0 + tol, side="right")
        for b in range(a + 1, hi):
            j = order[b]
            dp = float(_wrap(phi[j] - phi[i]))
            dz = col.z[j] - col.z[i]
            d = math.sqrt(dz * dz + (c * math.sin(0.5 * dp)) ** 2)
            if abs(d - 1.0) <= tol:
                adj[i].append(int(j))
                adj[j].append(int(i))
    for a in adj:
        a.sort()
    return ContactGraph(adj, tol)


def _match_image(col, k, dphi, dz, tol):
    phi = col.angles
    tz = col.z[k] + dz
    cand = np.where(np.abs(col.z - tz) <= tol)[0]
    if len(cand) == 0:
        return None
    err = np.abs(_wrap(phi[cand] - (phi[k] + dphi)))
    j = int(np.argmin(err))
    if err[j] <= tol:
        return max(float(err[j]), float(abs(col.z[cand[j]] - tz)))
    return None


def detect_periodicity(col: Column, graph: ContactGraph | None = None,
                       tol: float = PERIOD_TOL) -> HelicalPeriod | None:
    """Smallest screw motion (rotation, axial shift) mapping the column's
    trailing half onto itself, and the length of the unmapped leading part."""
    n = len(col)
    if n - col.template_len < 20:
        raise ValueError("need at least 20 post-template sites")
    phi = col.angles
    z = col.z
    ztop = z.max()
    half = n // 2
    trail = np.arange(half, n)
    ref = int(trail[np.argmin(z[trail])])
    cands = [j for j in range(n) if z[j] - z[ref] > tol and z[j] <= ztop - EDGE_MARGIN]
    cands.sort(key=lambda j: (z[j] - z[ref], j))
    checkable = [k for k in trail if z[k] <= ztop - EDGE_MARGIN]

    for j in cands:
        dphi = float(_wrap(phi[j] - phi[ref]))
        dz = float(z[j] - z[ref])
        todo = [k for k in checkable if z[k] + dz <= ztop - EDGE_MARGIN]
        if len(todo) < 4:
            break
        worst = 0.0
        for k in todo:
            r = _match_image(col, k, dphi, dz, tol)
            if r is None:
                break
            worst = max(worst, r)
        else:
            # leading sites that fail the same map form the transient
            last_bad = -1
            for k in range(half):
                if z[k] + dz > ztop - EDGE_MARGIN:
                    continue
                if _match_image(col, k, dphi, dz, tol) is None:
                    last_bad = k
            lo = z[ref] - 1e-7
            per = int(np.count_nonzero((z >= lo) & (z < lo + dz)))
            return HelicalPeriod(dphi, dz, per, worst, last_bad + 1)
    return None


# ---------------------------------------------------------------------------
# symmetric structures: exact ratios from the lattice equations


def _lattice_residual(x, m, n):
    c, s1, z1, s2, z2 = x

    def dist2(s, zz):
        return zz * zz + (c * math.sin(s / c)) ** 2

    return [m * z1 + n * z2,
            m * s1 + n * s2 - c * math.pi,
            dist2(s1, z1) - 1.0,
            dist2(s2, z2) - 1.0,
            dist2(s1 - s2, z1 - z2) - 1.0]


@lru_cache(maxsize=None)
def symmetric_ratio(l: int, m: int, n: int) -> float | None:
    """Diameter ratio at which the defect-free (l, m, n) packing exists.

    The periodicity vector V = m*b1 + n*b2 has length (D-1)*pi along s, and
    b1, b2 and b1 - b2 are all contacts. Start from the flat triangular
    lattice and solve the five equations for (D-1, b1, b2).
    """
    if l != m + n or m < n or m <= 0:
        raise ValueError("need l = m + n with m >= n >= 0, m > 0")
    if (m, n) == (1, 1):
        # the equations are degenerate here; the zigzag closes the family
        return 1.0 + math.sqrt(3.0) / 2.0
    circ = math.sqrt(m * m + n * n + m * n)
    t0 = -math.atan2(n * math.sin(math.pi / 3), m + n * math.cos(math.pi / 3))
    found = []
    for scale in (1.0, 0.8, 1.2, 0.6, 1.5):
        for dt in (0.0, 0.2, -0.2, 0.4, -0.4):
            t = t0 + dt
            x0 = [scale * circ / math.pi, math.cos(t), math.sin(t),
                  math.cos(t + math.pi / 3), math.sin(t + math.pi / 3)]
            sol, _, ier, _ = fsolve(_lattice_residual, x0, args=(m, n),
                                    full_output=True, xtol=1e-14)
            if ier == 1 and max(abs(v) for v in _lattice_residual(sol, m, n)) < 1e-10:
                found.append(1.0 + abs(sol[0]))
        if found:
            break
    return min(found) if found else None


@lru_cache(maxsize=1)
def symmetric_table() -> list[tuple[float, tuple[int, int, int]]]:
    out = []
    for l in range(2, 6):
        for n in range(0, l // 2 + 1):
            m = l - n
            D = symmetric_ratio(l, m, n)
            if D is not None and D <= D_MAX + 1e-9:
                out.append((D, (l, m, n)))
    out.sort()
    return out


def _neighbours(D):
    lower = upper = None
    for Ds, lmn in symmetric_table():
        if Ds <= D + 1e-12:
            lower = lmn
        elif upper is None:
            upper = lmn
    return lower, upper


@lru_cache(maxsize=1)
def line_slip_types() -> dict:
    with resources.files("cylpack").joinpath("data/line_slip_types.json").open() as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# classification


def _near_contacts(col, k, dphi, dz, d, tol):
    """Contact vectors (s, z, j) of site k within tol; a partner exactly pi
    away appears with both signs of s."""
    c = col.ratio - 1.0
    out = []
    for j in np.where(np.abs(d[k] - 1.0) <= tol)[0]:
        s = 0.5 * c * dphi[k, j]
        out.append((s, dz[k, j], int(j)))
        if abs(abs(dphi[k, j]) - math.pi) < PI_IMAGE_TOL:
            out.append((-s, dz[k, j], int(j)))
    return out


def _orient(v):
    s, z = v[0], v[1]
    # bonds within 0.05 of horizontal are oriented by s, so a nearly flat
    # ring bond cannot split into two clusters
    if (abs(z) > 0.05 and z < 0) or (abs(z) <= 0.05 and s < 0):
        return (-s, -z)
    return (s, z)


def _cluster(vectors, tol=0.1):
    reps: list[list[float]] = []
    labels = []
    for v in vectors:
        for i, r in enumerate(reps):
            if math.hypot(v[0] - r[0], v[1] - r[1]) < tol:
                labels.append(i)
                break
        else:
            reps.append([v[0], v[1]])
            labels.append(len(reps) - 1)
    return reps, labels


def _lattice_walk(col, start, steps, dphi, dz, d, tol):
    """Follow near-contacts along the given (s, z) step vectors.

    Returns (end site, summed s, summed z) or None if a step has no match.
    """
    c = col.ratio - 1.0
    k = start
    S = Z = 0.0
    for target in steps:
        best = None
        for s, zz, j in _near_contacts(col, k, dphi, dz, d, tol):
            e = math.hypot(s - target[0], zz - target[1])
            if e < 0.3 and (best is None or e < best[0]):
                best = (e, s, zz, j)
        if best is None:
            return None
        _, s, zz, j = best
        S += s
        Z += zz
        k = j
    return k, S, Z


def _symmetric_indices(col, interior, lam, dphi, dz, d, tol):
    """lmn and the recovered periodicity vector for a six-coordinated tail."""
    ref = int(interior[len(interior) // 2])
    vecs = _near_contacts(col, ref, dphi, dz, d, tol)
    if len(vecs) != 6:
        return None
    dirs, _ = _cluster([_orient(v) for v in vecs], tol=0.05)
    if len(dirs) != 3:
        return None
    counts = [lam * abs(v[1]) for v in dirs]
    ints = [round(x) for x in counts]
    if max(abs(x - i) for x, i in zip(counts, ints)) > 0.15:
        return None
    lmn = tuple(sorted(ints, reverse=True))
    if lmn[0] != lmn[1] + lmn[2] or lmn[0] == 0:
        return None
    # basis: the two directions with the smaller counts; V = ca*ba + cb*bb with
    # |ca| = count along bb and |cb| = count along ba
    order = np.argsort(ints)
    ba, bb = dirs[order[0]], dirs[order[1]]
    na, nb = ints[order[0]], ints[order[1]]
    for sa in (1, -1):
        for sb in (1, -1):
            ca, cb = sa * nb, sb * na
            zsum = ca * ba[1] + cb * bb[1]
            ssum = ca * ba[0] + cb * bb[0]
            if abs(zsum) > 0.1 or ssum <= 0:
                continue
            steps = [(math.copysign(1, ca) * ba[0], math.copysign(1, ca) * ba[1])] * abs(ca)
            steps += [(math.copysign(1, cb) * bb[0], math.copysign(1, cb) * bb[1])] * abs(cb)
            walk = _lattice_walk(col, ref, steps, dphi, dz, d, tol)
            if walk is None:
                continue
            end, S, Z = walk
            if end != ref or abs(Z) > 1e-9:
                continue
            return lmn, (S, Z)
    return None


def _constant_steps(col, idx, tol):
    """Common (dphi, dz) between consecutive sites of idx, or None."""
    if len(idx) < 4:
        return None
    ph = col.angles[idx]
    st_phi = _wrap(np.diff(ph))
    st_z = np.diff(col.z[idx])
    # angles near pi may wrap to either sign
    st_phi = np.where(np.abs(np.abs(st_phi) - math.pi) < tol, math.pi, st_phi)
    if np.ptp(st_phi) <= tol and np.ptp(st_z) <= tol:
        return float(np.mean(st_phi)), float(np.mean(st_z))
    return None


def classify_structure(col: Column, graph: ContactGraph | None = None,
                       period: HelicalPeriod | None = None) -> StructureLabel:
    """Label the periodic tail of a column.

    Tests run in order: single file, zigzag, doublets, symmetric (six near
    contacts everywhere), single helix, double helix, line slip (every site
    five or six near contacts, at least one five). Transient sites are never
    looked at.
    """
    if period is None:
        return StructureLabel("Unclassified")
    D = col.ratio
    t0 = period.transient_len
    zt = col.z.max()
    zmin_tail = col.z[t0:].min()
    tail = np.array([k for k in np.argsort(col.z, kind="stable")
                     if k >= t0 and col.z[k] <= zt - EDGE_MARGIN])
    interior = np.array([k for k in tail if col.z[k] >= zmin_tail + 1.5])
    if len(interior) < 4:
        return StructureLabel("Unclassified", transient_len=t0)
    lam = period.sites_per_period / period.dz_p

    one = _constant_steps(col, tail, STEP_TOL)
    if one is not None:
        if abs(one[0]) <= STEP_TOL:
            return StructureLabel("SingleFile", transient_len=t0)
        if abs(abs(one[0]) - math.pi) <= STEP_TOL:
            return StructureLabel("Zigzag", transient_len=t0)

    dphi, dz, d = _pairwise(col)
    coord = np.array([len(_near_contacts(col, k, dphi, dz, d, STRUCT_TOL))
                      for k in interior])

    if period.sites_per_period == 2:
        pairs = all(
            np.any((np.abs(dz[k]) < 1e-6) & (np.abs(np.abs(dphi[k]) - math.pi) < 1e-6))
            for k in interior)
        if pairs:
            sym = _symmetric_indices(col, interior, lam, dphi, dz, d, STRUCT_TOL)
            if sym:
                return StructureLabel("Doublets", lmn=sym[0], period_vector=sym[1],
                                      v_residual=abs(abs(sym[1][0]) - period_length(D)),
                                      transient_len=t0)
            return StructureLabel("Doublets", transient_len=t0)

    if np.all(coord == 6):
        sym = _symmetric_indices(col, interior, lam, dphi, dz, d, STRUCT_TOL)
        if sym:
            return StructureLabel("Symmetric", lmn=sym[0], period_vector=sym[1],
                                  v_residual=abs(abs(sym[1][0]) - period_length(D)),
                                  transient_len=t0)

    if one is not None:
        return StructureLabel("SingleHelix", transient_len=t0)
    if D < 2.0:
        even = _constant_steps(col, tail[0::2], STEP_TOL)
        odd = _constant_steps(col, tail[1::2], STEP_TOL)
        if even and odd and abs(even[0] - odd[0]) <= STEP_TOL and abs(even[1] - odd[1]) <= STEP_TOL:
            return StructureLabel("DoubleHelix", transient_len=t0)

    if coord.min() >= 5 and coord.max() <= 6 and coord.min() == 5:
        lower, upper = _neighbours(D)
        slip = _intact_directions(col, interior, lam, dphi, dz, d)
        stype = None
        if lower and upper and slip:
            key = "%s-%s" % ("".join(map(str, lower)), "".join(map(str, upper)))
            stype = line_slip_types().get(key, {}).get(",".join(map(str, slip)))
        return StructureLabel("LineSlip", lower=lower, upper=upper, slip=slip,
                              slip_type=stype, transient_len=t0)
    return StructureLabel("Unclassified", transient_len=t0)


def _intact_directions(col, interior, lam, dphi, dz, d):
    """Parastichy counts of bond directions present on both sides of every
    interior site; the slip runs along these."""
    per_site = []
    allv = []
    for k in interior:
        vs = _near_contacts(col, k, dphi, dz, d, STRUCT_TOL)
        per_site.append(vs)
        allv.extend(_orient(v) for v in vs)
    reps, _ = _cluster(allv, tol=0.1)
    intact = []
    for r in reps:
        ok = True
        for vs in per_site:
            up = any(math.hypot(s - r[0], z - r[1]) < 0.1 for s, z, _ in vs)
            dn = any(math.hypot(s + r[0], z + r[1]) < 0.1 for s, z, _ in vs)
            if not (up and dn):
                ok = False
                break
        if ok:
            intact.append(round(lam * abs(r[1])))
    return tuple(sorted(set(intact))) or None


def label_column(col: Column) -> StructureLabel:
    """Classify a column, falling back to a structural-tolerance period when
    the tail drifts slowly and no screw map holds to PERIOD_TOL."""
    graph = contact_graph(col)
    try:
        period = detect_periodicity(col, graph)
        loose = period is None
        if loose:
            period = detect_periodicity(col, graph, tol=STRUCT_TOL)
    except ValueError:
        return StructureLabel("Unclassified")
    label = classify_structure(col, graph, period)
    if loose and period is not None:
        label = replace(label, loose_period=True)
    return label


# ---------------------------------------------------------------------------
# phyllotactic diagram data


def phyllotactic_points(col: Column) -> list[PhyllotacticPoint]:
    D = col.ratio
    per = period_length(D)
    s = np.remainder((D - 1.0) * col.angles / 2.0, per) if per > 0 else np.zeros(len(col))
    s = np.where(np.isclose(s, per, rtol=0, atol=1e-12), 0.0, s)
    return [PhyllotacticPoint(float(a), float(b)) for a, b in zip(s, col.z)]


def boundary_curve(D: float, s0: float, z0: float, samples: int = 181) -> np.ndarray:
    """Closed outline around one point of the phyllotactic plot.

    The contact relation in (ds, dz) with both offsets doubled:
    (2 dz)^2 + ((D-1)^2 / 2) (1 - cos(4 ds / (D-1))) = 1.
    Each outline passes through the midpoint of every contact.
    """
    c = D - 1.0
    if c <= 0:
        s = np.zeros(samples)
        zz = np.linspace(-0.5, 0.5, samples)
        return np.column_stack([s0 + s, z0 + zz])
    # largest doubled angular offset with a real solution
    wmax = math.pi if c <= 1.0 else math.acos(1.0 - 2.0 / (c * c))
    smax = c * wmax / 4.0
    ds = smax * np.sin(np.linspace(-0.5 * math.pi, 0.5 * math.pi, samples))
    # 1 - cos(x) written as 2 sin^2(x/2) to survive large D
    r = 1.0 - (c * np.sin(2.0 * ds / c)) ** 2
    hz = 0.5 * np.sqrt(np.clip(r, 0.0, None))
    upper = np.column_stack([s0 + ds, z0 + hz])
    lower = np.column_stack([s0 + ds[::-1], z0 - hz[::-1]])
    return np.vstack([upper, lower, upper[:1]])
