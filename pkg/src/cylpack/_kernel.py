"""Compiled inner loops for sequential deposition.

All angles here are direction-normalised: the caller multiplies by the
deposition direction, so the scan always runs towards increasing angle and a
mirrored run is the bitwise negation of the unmirrored one.

``c`` is ``D - 1`` throughout. A site constrains a new sphere at angular
separation ``x`` when ``1 - (c sin(x/2))^2 > R_EPS``; below that threshold the
worst overlap is ~R_EPS/2, far under the contact tolerance.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
R_EPS = 1e-12
NEG_INF = -np.inf
# sites this far below the top rarely matter at the minimum; checked after
# every step and widened one diameter at a time when violated
ACTIVE_DEPTH = 1.5


@njit(cache=True)
def wrap(x):
    w = x - TWO_PI * math.floor((x + math.pi) / TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    elif w > math.pi:
        w -= TWO_PI
    return w


@njit(cache=True)
def branch(c, x):
    s = c * math.sin(0.5 * x)
    r = 1.0 - s * s
    if r > R_EPS:
        return math.sqrt(r)
    return NEG_INF


@njit(cache=True)
def closed_support(psi, z, n, c, x):
    """Support with every r >= 0 counted: the zero-tolerance geometry.

    Never below the R_EPS version, so the grid cross-check cannot fall into
    the ~sqrt(R_EPS) dips that dropping near-edge sites opens up.
    """
    best = NEG_INF
    for j in range(n):
        s = c * math.sin(0.5 * (x - psi[j]))
        r = 1.0 - s * s
        if r >= 0.0:
            v = z[j] + math.sqrt(r)
            if v > best:
                best = v
    return best


@njit(cache=True)
def support(psi, z, idx, m, c, x):
    best = NEG_INF
    for k in range(m):
        j = idx[k]
        h = branch(c, x - psi[j])
        if h != NEG_INF:
            v = z[j] + h
            if v > best:
                best = v
    return best


@njit(cache=True)
def support_all(psi, z, n, c, x):
    best = NEG_INF
    for j in range(n):
        h = branch(c, x - psi[j])
        if h != NEG_INF:
            v = z[j] + h
            if v > best:
                best = v
    return best


@njit(cache=True)
def covers(psi, idx, m, c, W):
    """True when the open contact windows of idx[:m] cover the whole circle.

    Open arcs cover the circle iff every right endpoint lies inside some arc.
    """
    if m == 0:
        return False
    if W >= math.pi and branch(c, math.pi) != NEG_INF:
        return True
    for k in range(m):
        e = psi[idx[k]] + W
        inside = False
        for k2 in range(m):
            if branch(c, e - psi[idx[k2]]) != NEG_INF:
                inside = True
                break
        if not inside:
            return False
    return True


@njit(cache=True)
def _crossing_residual(c, a, delta, d, u):
    hi = branch(c, u + delta)
    hj = branch(c, u - delta)
    if hi == NEG_INF or hj == NEG_INF:
        return np.nan, np.nan
    g = hi - hj - d
    # dh/dx = -a sin x / (2 h)
    dg = -a * math.sin(u + delta) / (2.0 * hi) + a * math.sin(u - delta) / (2.0 * hj)
    return g, dg


@njit(cache=True)
def _polish(c, a, delta, d, u):
    g, dg = _crossing_residual(c, a, delta, d, u)
    if np.isnan(g):
        return u, np.inf
    for _ in range(6):
        if abs(g) < 1e-15 or dg == 0.0 or np.isnan(dg):
            break
        un = u - g / dg
        gn, dgn = _crossing_residual(c, a, delta, d, un)
        if np.isnan(gn) or abs(gn) >= abs(g):
            break
        u, g, dg = un, gn, dgn
    return u, abs(g)


@njit(cache=True)
def crossings(c, psi_i, z_i, psi_j, z_j, out):
    """Angles where the branches of sites i and j meet; returns count.

    With x_i = u + delta, x_j = u - delta and d = z_j - z_i, eliminating the
    square roots from h_i - h_j = d leaves a quadratic in cos u.
    """
    a = 0.5 * c * c
    if a < 1e-15:
        return 0
    delta = 0.5 * wrap(psi_j - psi_i)
    d = z_j - z_i
    sd = math.sin(delta)
    cd = math.cos(delta)
    mid = psi_i + delta
    cos_roots = np.empty(2)
    nr = 0
    if abs(d) < 1e-14:
        if abs(sd) < 1e-15:
            return 0
        cos_roots[0] = 1.0
        cos_roots[1] = -1.0
        nr = 2
    else:
        k = 2.0 * a * sd / d
        A = k * k
        B = 4.0 * a * cd
        C = 4.0 - 4.0 * a - d * d - A
        if A < 1e-14:
            if abs(B) < 1e-15:
                return 0
            cos_roots[0] = -C / B
            nr = 1
        else:
            disc = B * B - 4.0 * A * C
            if disc < 0.0:
                if disc > -1e-12 * (B * B + abs(4.0 * A * C)):
                    disc = 0.0
                else:
                    return 0
            sq = math.sqrt(disc)
            q = -0.5 * (B + sq) if B >= 0.0 else -0.5 * (B - sq)
            if q != 0.0:
                cos_roots[0] = q / A
                cos_roots[1] = C / q
                nr = 2
            else:
                cos_roots[0] = 0.0
                nr = 1
    cnt = 0
    for r in range(nr):
        cr = cos_roots[r]
        if cr < -1.0 - 1e-9 or cr > 1.0 + 1e-9:
            continue
        cr = min(1.0, max(-1.0, cr))
        base = math.acos(cr)
        for sgn in (1.0, -1.0):
            if sgn < 0.0 and (base == 0.0 or base == math.pi):
                continue
            u, res = _polish(c, a, delta, d, sgn * base)
            if res < 1e-11:
                out[cnt] = mid + u
                cnt += 1
    return cnt


@njit(cache=True)
def lowest_site(psi, z, n, psi_prev, c, W, deg_tol, depth):
    """Lowest support position over one full turn starting at psi_prev.

    Candidates are the branch crossings, the window edges and psi_prev
    itself; the minimum of a maximum of single-peaked branches can only sit
    at one of these. Among heights within deg_tol of the minimum the first
    angle met when scanning upward from psi_prev wins.
    """
    ztop = NEG_INF
    for j in range(n):
        if z[j] > ztop:
            ztop = z[j]
    while True:
        zthr = ztop - depth
        idx = np.empty(n, dtype=np.int64)
        m = 0
        zexcl = NEG_INF
        for j in range(n):
            if z[j] >= zthr:
                idx[m] = j
                m += 1
            elif z[j] > zexcl:
                zexcl = z[j]

        ncand_max = 1 + 2 * m + 4 * (m * (m - 1)) // 2
        cx = np.empty(ncand_max)
        cv = np.empty(ncand_max)
        nc = 0
        best = np.inf

        # psi_prev, then window edges
        v = support(psi, z, idx, m, c, psi_prev)
        if v != NEG_INF:
            cx[nc] = psi_prev
            cv[nc] = v
            nc += 1
            best = min(best, v)
        for k in range(m):
            j = idx[k]
            for sgn in (1.0, -1.0):
                if sgn < 0.0 and W >= math.pi:
                    continue
                x = psi[j] + sgn * W
                v = support(psi, z, idx, m, c, x)
                if v != NEG_INF and v <= best + deg_tol:
                    cx[nc] = x
                    cv[nc] = v
                    nc += 1
                    if v < best:
                        best = v

        roots = np.empty(4)
        for k1 in range(m):
            i = idx[k1]
            for k2 in range(k1 + 1, m):
                j = idx[k2]
                if abs(z[i] - z[j]) > 1.0 + 1e-12:
                    continue
                # a crossing is never lower than the higher of the two sites
                if max(z[i], z[j]) > best + deg_tol:
                    continue
                nr = crossings(c, psi[i], z[i], psi[j], z[j], roots)
                for r in range(nr):
                    x = roots[r]
                    lower = z[i] + branch(c, x - psi[i])
                    if lower > best + deg_tol:
                        continue
                    v = support(psi, z, idx, m, c, x)
                    if v != NEG_INF and v <= best + deg_tol:
                        cx[nc] = x
                        cv[nc] = v
                        nc += 1
                        if v < best:
                            best = v

        # exact only if the subset covers the circle and nothing excluded can
        # reach the minimum
        if m < n and (nc == 0 or zexcl + 1.0 > best - 1e-12
                      or not covers(psi, idx, m, c, W)):
            depth += 1.0
            continue
        if nc == 0:
            return np.nan, np.nan

        bx = 0.0
        bv = 0.0
        boff = np.inf
        for k in range(nc):
            if cv[k] > best + deg_tol:
                continue
            off = (cx[k] - psi_prev) % TWO_PI
            if off > TWO_PI - 1e-11:
                off = 0.0
            if off < boff:
                boff = off
                bx = psi_prev + off
                bv = cv[k]
        return bx, bv


@njit(cache=True)
def grid_minimum(psi, z, n, psi_prev, c, grid):
    """Brute-force cross-check: coarse scan then golden-section refinement."""
    step = TWO_PI / grid
    bi = -1
    bv = np.inf
    for g in range(grid):
        v = closed_support(psi, z, n, c, psi_prev + g * step)
        if v != NEG_INF and v < bv:
            bv = v
            bi = g
    if bi < 0:
        return np.nan, np.nan
    lo = psi_prev + (bi - 1) * step
    hi = psi_prev + (bi + 1) * step
    gr = 0.5 * (math.sqrt(5.0) - 1.0)
    x1 = hi - gr * (hi - lo)
    x2 = lo + gr * (hi - lo)
    f1 = closed_support(psi, z, n, c, x1)
    f2 = closed_support(psi, z, n, c, x2)
    if f1 == NEG_INF:
        f1 = np.inf
    if f2 == NEG_INF:
        f2 = np.inf
    while hi - lo > 1e-12:
        if f1 <= f2:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - gr * (hi - lo)
            f1 = closed_support(psi, z, n, c, x1)
            if f1 == NEG_INF:
                f1 = np.inf
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + gr * (hi - lo)
            f2 = closed_support(psi, z, n, c, x2)
            if f2 == NEG_INF:
                f2 = np.inf
    x = 0.5 * (lo + hi)
    v = closed_support(psi, z, n, c, x)
    if v == NEG_INF or v > bv:
        return psi_prev + bi * step, bv
    return x, v


@njit(cache=True)
def ring_images(psi, z, n, u):
    """Column copies rotated by -2*pi*k/u; the support of this set at x is
    the highest support met by any member of a u-ring with offset x."""
    pi_ = np.empty(n * u)
    zi = np.empty(n * u)
    for k in range(u):
        for j in range(n):
            pi_[k * n + j] = psi[j] - k * TWO_PI / u
            zi[k * n + j] = z[j]
    return pi_, zi


@njit(cache=True)
def ring_offset(psi, z, n, psi_prev, c, W, deg_tol, u, grid, cross_check):
    """Ring offset minimising its highest member; returns (x, fixed)."""
    if u == 1:
        pi_, zi, m = psi, z, n
    else:
        pi_, zi = ring_images(psi, z, n, u)
        m = n * u
    x, v = lowest_site(pi_, zi, m, psi_prev, c, W, deg_tol, ACTIVE_DEPTH)
    fixed = 0
    if cross_check and not np.isnan(x):
        gx, gv = grid_minimum(pi_, zi, m, psi_prev, c, grid)
        if gv < v - 1e-9:
            x = gx
            fixed = 1
    return x, v, fixed


@njit(cache=True)
def grow(psi, z, n, n_template, target, c, W, deg_tol, u, grid, cross_check):
    """Deposit until the post-template axial extent reaches target.

    Each step places u spheres at x + 2*pi*k/u, x from ring_offset, each at
    its own support height over everything placed before it. Returns
    (n, status, n_fixed): status 0 done, 1 out of capacity, 2 no candidate;
    n_fixed counts steps where the grid scan beat the candidates.
    """
    cap = psi.shape[0]
    n_fixed = 0
    zlo = np.inf
    zhi = NEG_INF
    for j in range(n_template, n):
        zlo = min(zlo, z[j])
        zhi = max(zhi, z[j])
    while True:
        if n > n_template and zhi - zlo >= target:
            return n, 0, n_fixed
        if n + u > cap:
            return n, 1, n_fixed
        x, v, fixed = ring_offset(psi, z, n, psi[n - 1], c, W, deg_tol, u, grid,
                                  cross_check)
        if np.isnan(x):
            return n, 2, n_fixed
        n_fixed += fixed
        for k in range(u):
            xk = x + k * TWO_PI / u
            vk = v if u == 1 else support_all(psi, z, n, c, xk)
            if vk == NEG_INF:
                return n, 2, n_fixed
            psi[n] = xk
            z[n] = vk
            n += 1
            zlo = min(zlo, vk)
            zhi = max(zhi, vk)
