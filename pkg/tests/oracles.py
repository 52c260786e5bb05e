"""Independent brute-force checks used by several test modules.

Plain numpy, no shared code with the compiled search.
"""

import math

import numpy as np

TOL = 1e-9


def pair_distances(col):
    c = col.ratio - 1.0
    phi, z = col.angles, col.z
    dphi = phi[None, :] - phi[:, None]
    d = np.sqrt((z[None, :] - z[:, None]) ** 2 + (c * np.sin(0.5 * dphi)) ** 2)
    np.fill_diagonal(d, np.inf)
    return d


def min_pair_distance(col):
    return float(pair_distances(col).min())


def sites_without_earlier_contact(col):
    d = pair_distances(col)
    bad = []
    for k in range(col.template_len, len(col)):
        if not np.any(np.abs(d[k, :k] - 1.0) <= TOL):
            bad.append(k)
    return bad


def _support(phi, z, c, grid):
    """max_j z_j + sqrt(1 - (c sin(dphi/2))^2) on grid, -inf where undefined."""
    s = c * np.sin(0.5 * (grid[:, None] - phi[None, :]))
    r = 1.0 - s * s
    h = np.where(r >= 0.0, np.sqrt(np.clip(r, 0.0, None)), -np.inf)
    return (z[None, :] + h).max(axis=1)


def rescan_gap(col, k, samples=40960):
    """How far below site k's height the brute-force support dips.

    Positive means the fine grid found a lower site than the one chosen.
    Sites more than a diameter below z_k cannot lift the support above z_k,
    so they are only consulted where the local subset leaves a gap.
    """
    c = col.ratio - 1.0
    phi, z = col.angles[:k], col.z[:k]
    vk = col.z[k]
    grid = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    near = z > vk - 1.0 - 1e-6
    sup = _support(phi[near], z[near], c, grid)
    low = sup < vk - TOL
    if low.any():
        sup[low] = _support(phi, z, c, grid[low])
    sup = sup[np.isfinite(sup)]
    return float(vk - sup.min())
