import math

import pytest
from hypothesis import given, strategies as st

from cylpack.geometry import (
    D_MAX,
    DomainError,
    SurfaceSite,
    _contact_offset_unchecked,
    angle_from_arc,
    angular_window,
    arc_length,
    center_distance,
    check_ratio,
    contact_offset,
    period_length,
    wrap_angle,
)

ratios = st.floats(1.0, D_MAX)


def test_d_max_value():
    assert D_MAX == pytest.approx(2.7013016167040798, abs=1e-12)


@pytest.mark.parametrize("D, dphi, expected", [
    (1.8, math.pi, 0.6),
    (1.5, 0.0, 1.0),
    (2.3, 0.0, 1.0),
    (2.0, math.pi, 0.0),
])
def test_contact_offset_examples(D, dphi, expected):
    assert contact_offset(D, dphi) == pytest.approx(expected, abs=1e-12)


def test_no_contact_beyond_window():
    assert contact_offset(2.7013, math.pi) is None


@pytest.mark.parametrize("D", [0.99, 2.71, 3.0, float("nan")])
def test_ratio_out_of_range(D):
    with pytest.raises(DomainError):
        contact_offset(D, 0.1)
    with pytest.raises(DomainError):
        angular_window(D)


def test_angular_window():
    assert angular_window(1.5) == math.pi
    assert angular_window(2.0) == math.pi
    assert angular_window(D_MAX) == pytest.approx(2 * math.pi / 5, abs=1e-12)
    assert angular_window(2.4) == pytest.approx(math.acos(1 - 2 / 1.96), abs=1e-15)


def test_center_distance_examples():
    a = SurfaceSite(0, 0.0, 0.0)
    assert center_distance(1.8, a, SurfaceSite(1, math.pi, 0.6)) == pytest.approx(1.0, abs=1e-12)
    assert center_distance(2.2, a, a) == 0.0
    assert center_distance(2.0, a, SurfaceSite(1, 2 * math.pi, 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_arc_length():
    assert arc_length(2.7013, 0.0) == 0.0
    assert arc_length(2.0, math.pi) == pytest.approx(math.pi / 2)
    assert arc_length(2.0, 2 * math.pi) == pytest.approx(period_length(2.0))
    assert angle_from_arc(2.0, math.pi / 2) == pytest.approx(math.pi)


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(7.0) == pytest.approx(7.0 - 2 * math.pi)


@given(st.floats(1.0, 1.999999), st.floats(-10, 10))
def test_below_two_always_positive_offset(D, dphi):
    dz = contact_offset(D, dphi)
    assert dz is not None and dz > 0


@given(st.floats(2.0, D_MAX))
def test_window_edge_is_flat_contact(D):
    assert contact_offset(D, angular_window(D)) == pytest.approx(0.0, abs=1e-7)
    # squared offset is the exact quantity
    r = 1 - ((D - 1) * math.sin(angular_window(D) / 2)) ** 2
    assert abs(r) < 1e-12


@given(ratios, st.floats(0, 1), st.floats(0, 1))
def test_offset_monotone_in_angle(D, a, b):
    W = angular_window(D)
    x, y = sorted((a * W, b * W))
    hx, hy = contact_offset(D, x), contact_offset(D, y)
    assert hx is not None and hy is not None
    assert hy <= hx + 1e-15


@given(ratios, st.floats(-math.pi, math.pi))
def test_contact_iff_unit_distance(D, dphi):
    dz = contact_offset(D, dphi)
    if dz is None:
        return
    a = SurfaceSite(0, 0.3, 1.0)
    b = SurfaceSite(1, 0.3 + dphi, 1.0 + dz)
    assert abs(center_distance(D, a, b) - 1.0) < 1e-12


@given(ratios, st.floats(-20, 20), st.floats(-5, 5), st.floats(-20, 20), st.floats(-5, 5))
def test_distance_symmetric(D, p1, z1, p2, z2):
    a, b = SurfaceSite(0, p1, z1), SurfaceSite(1, p2, z2)
    assert center_distance(D, a, b) == pytest.approx(center_distance(D, b, a), abs=1e-12)


@pytest.mark.parametrize("ds", [0.1, 0.5, 0.9])
def test_flat_wall_limit(ds):
    D = 1e6
    dz = _contact_offset_unchecked(D, angle_from_arc(D, ds))
    assert abs(dz * dz + ds * ds - 1) < 1e-9


def test_check_ratio_passthrough():
    assert check_ratio(1) == 1.0
