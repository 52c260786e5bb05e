"""Contact geometry for spheres touching the inner wall of a cylinder.

Lengths are in sphere diameters. A wall-touching sphere has its centre at
radius ``(D - 1) / 2``, so two such spheres are fully described by their
angular separation and their axial separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

D_MIN = 1.0
D_MAX = 1.0 + 1.0 / math.sin(math.pi / 5.0)  # 2.70130...

CONTACT_TOL = 1e-9
RADICAND_EPS = 1e-12


class DomainError(ValueError):
    """Diameter ratio outside the range where the method applies."""


@dataclass(frozen=True)
class SurfaceSite:
    index: int
    angle: float  # unwrapped azimuth, radians
    axial: float


def check_ratio(D: float) -> float:
    D = float(D)
    if not (D_MIN <= D <= D_MAX) or math.isnan(D):
        raise DomainError(f"diameter ratio {D!r} outside [{D_MIN}, {D_MAX:.6f}]")
    return D


def wrap_angle(phi: float) -> float:
    """Map an angle onto (-pi, pi]."""
    w = math.remainder(phi, 2.0 * math.pi)
    if w == -math.pi:
        return math.pi
    return w


def _radicand(D: float, dphi: float) -> float:
    # 1 - ((D-1)^2/2)(1 - cos dphi), written with sin^2 to keep precision near 0
    c = (D - 1.0) * math.sin(0.5 * dphi)
    return 1.0 - c * c


def _contact_offset_unchecked(D: float, dphi: float) -> float | None:
    # test hook: no range check, used for the flat-wall limit
    r = _radicand(D, dphi)
    if r < 0.0:
        # rounding at the window edge, where the true radicand is zero
        if r > -RADICAND_EPS:
            return 0.0
        return None
    return math.sqrt(r)


def contact_offset(D: float, dphi: float) -> float | None:
    """Axial offset at which two wall spheres ``dphi`` apart touch.

    Returns the non-negative root, or None when the spheres cannot touch at
    that angular separation.
    """
    return _contact_offset_unchecked(check_ratio(D), dphi)


def angular_window(D: float) -> float:
    """Largest angular separation at which two wall spheres can touch."""
    D = check_ratio(D)
    if D <= 2.0:
        return math.pi
    return math.acos(1.0 - 2.0 / (D - 1.0) ** 2)


def chord(D: float, dphi: float) -> float:
    """Straight-line distance between centres at equal height."""
    return abs((D - 1.0) * math.sin(0.5 * wrap_angle(dphi)))


def center_distance(D: float, a: SurfaceSite, b: SurfaceSite) -> float:
    dz = b.axial - a.axial
    c = (D - 1.0) * math.sin(0.5 * wrap_angle(b.angle - a.angle))
    return math.sqrt(dz * dz + c * c)


def arc_length(D: float, phi: float) -> float:
    return (D - 1.0) * phi / 2.0


def angle_from_arc(D: float, s: float) -> float:
    return 2.0 * s / (D - 1.0)


def period_length(D: float) -> float:
    """Circumference of the centre cylinder in arc-length units, (D-1)*pi."""
    return (D - 1.0) * math.pi
