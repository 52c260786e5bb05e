import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from cylpack.deposition import (
    Column,
    DepositionConfig,
    InvalidTemplate,
    ParameterError,
    TemplateParams,
    build_template,
    deposit_group,
    deposit_next,
    run_deposition,
    support_height,
)
from cylpack.density import fit_number_density
from cylpack.geometry import D_MAX, angular_window, contact_offset

from oracles import TOL, min_pair_distance, rescan_gap, sites_without_earlier_contact

FAST = DepositionConfig(cross_check=False)


def single(D):
    return Column.from_sites(D, 1, 1, [0.0], [0.0])


def template_strategy():
    @st.composite
    def make(draw):
        D = draw(st.floats(1.0, D_MAX))
        dphi = draw(st.floats(0.0, math.pi))
        dz = draw(st.floats(0.0, 1.0))
        direction = draw(st.sampled_from([1, -1]))
        if contact_offset(D, dphi) is not None:
            dz = None
        return D, TemplateParams(dphi, dz, direction)
    return make()


def try_run(D, params, cfg=FAST):
    try:
        return run_deposition(D, params, cfg)
    except InvalidTemplate:
        return None


# --- templates ---------------------------------------------------------------

def test_two_seed_spheres_for_small_d():
    col = build_template(1.8, TemplateParams(math.pi))
    assert col.template_len == 2
    assert col.z[1] == pytest.approx(0.6)


def test_template_chain_at_2_4():
    # 2pi/3 lies beyond the window at D=2.4, so the seed offset is free
    col = build_template(2.4, TemplateParams(2 * math.pi / 3, 0.3))
    n = col.template_len
    assert n == 3
    assert col.z[2] == pytest.approx(0.6)  # no contact at 4pi/3 either: fallback 2*dz21
    np.testing.assert_allclose(col.angles, 2 * math.pi / 3 * np.arange(n), atol=1e-15)
    # the windows of the first n-1 sites leave a gap, all n cover the circle
    W = angular_window(2.4)
    ang = np.mod(col.angles, 2 * math.pi)
    grid = np.linspace(0, 2 * math.pi, 20001)
    covered = lambda a: np.all(np.min(np.abs((grid[:, None] - a[None, :] + math.pi)
                                             % (2 * math.pi) - math.pi), axis=1) < W)
    assert covered(ang)
    assert not covered(ang[:-1])


def test_vertical_stack_template_invalid():
    with pytest.raises(InvalidTemplate):
        build_template(2.4, TemplateParams(0.0, 0.5))


def test_missing_dz21_rejected():
    with pytest.raises(ParameterError):
        build_template(2.4, TemplateParams(math.pi))


@pytest.mark.parametrize("kw", [dict(dphi21=-0.1), dict(dphi21=4.0), dict(dphi21=1.0, dz21=1.5),
                                dict(dphi21=1.0, direction=0)])
def test_bad_params(kw):
    with pytest.raises(ParameterError):
        TemplateParams(**kw)


def test_config_validation():
    with pytest.raises(ParameterError):
        DepositionConfig(target_length=5)
    with pytest.raises(ParameterError):
        DepositionConfig(group_size=5)
    with pytest.raises(ParameterError):
        DepositionConfig(scan_grid=100)


# --- support height and single steps -------------------------------------------

def test_support_height_examples():
    assert support_height(single(1.8), math.pi) == pytest.approx(0.6)
    assert support_height(single(1.8), 0.0) == pytest.approx(1.0)
    assert support_height(single(2.4), math.pi) is None


def test_zigzag_steps():
    col = single(1.8)
    s = deposit_next(col)
    assert (s.angle, s.axial) == (pytest.approx(math.pi), pytest.approx(0.6))
    col = col.extended([s])
    s = deposit_next(col)
    assert (s.angle, s.axial) == (pytest.approx(2 * math.pi), pytest.approx(1.2))


def test_tie_break_first_in_scan():
    # two equal-height sites: the lowest support is equally deep on either side
    D = 2.0
    col = Column.from_sites(D, 1, 2, [0.0, math.pi], [0.0, 0.0])
    s = deposit_next(col)
    assert s.axial == pytest.approx(math.sqrt(0.5))
    assert s.angle == pytest.approx(math.pi + math.pi / 2)
    s2 = deposit_next(col.mirrored())
    assert s2.angle == pytest.approx(-(math.pi + math.pi / 2))


def test_vertical_stack_at_one():
    col = run_deposition(1.0, TemplateParams(1.3))
    assert np.allclose(np.diff(col.z), 1.0)


def test_doublets_layer_spacing():
    col = run_deposition(2.0, TemplateParams(math.pi / 2))
    z = np.sort(col.z[col.template_len:])
    steps = np.diff(z)
    layers = steps[steps > 1e-6]
    assert np.all(steps[steps <= 1e-6] < 1e-12)
    assert np.allclose(layers, math.sqrt(0.5), atol=1e-9)


def test_group_of_two_gives_doublets():
    cfg = DepositionConfig(group_size=2)
    col = run_deposition(2.0, TemplateParams(math.pi / 2), cfg)
    ref = run_deposition(2.0, TemplateParams(math.pi / 2))
    assert fit_number_density(col).vf == pytest.approx(fit_number_density(ref).vf, abs=1e-9)


def test_group_members_spread_evenly():
    col = build_template(2.1, TemplateParams(2.3, 0.4))
    sites = deposit_group(col, DepositionConfig(group_size=3))
    assert len(sites) == 3
    d = np.diff([s.angle for s in sites])
    assert np.allclose(d, 2 * math.pi / 3)


def test_deterministic():
    p = TemplateParams(2.9, 0.4)
    a = run_deposition(2.3, p, FAST)
    b = run_deposition(2.3, p, FAST)
    assert np.array_equal(a.psi, b.psi) and np.array_equal(a.z, b.z)


def test_cross_check_agrees():
    p = TemplateParams(2.5, 0.3)
    a = run_deposition(2.25, p, FAST)
    b = run_deposition(2.25, p, DepositionConfig())
    assert np.array_equal(a.z, b.z)


def test_reaches_target_length():
    col = run_deposition(2.2, TemplateParams(1.5), DepositionConfig(target_length=30))
    assert col.post_template_extent >= 30


# --- properties ------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(template_strategy())
def test_no_overlap_and_contact(case):
    col = try_run(*case)
    assume(col is not None)
    assert min_pair_distance(col) >= 1.0 - TOL
    assert sites_without_earlier_contact(col) == []


@settings(max_examples=8, deadline=None)
@given(template_strategy())
def test_greedy_step_is_lowest(case):
    col = try_run(*case)
    assume(col is not None)
    for k in range(col.template_len, len(col), 7):
        assert rescan_gap(col, k) <= TOL


@settings(max_examples=25, deadline=None)
@given(template_strategy())
def test_mirror(case):
    D, p = case
    col = try_run(D, p)
    assume(col is not None)
    flipped = run_deposition(D, TemplateParams(p.dphi21, p.dz21, -p.direction), FAST)
    assert np.array_equal(flipped.angles, -col.angles)
    assert np.array_equal(flipped.z, col.z)
    assert fit_number_density(flipped).vf == pytest.approx(fit_number_density(col).vf, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(template_strategy())
def test_group_of_one_is_next(case):
    col = try_run(*case)
    assume(col is not None)
    cfg = DepositionConfig(group_size=1, cross_check=False)
    head = Column(col.ratio, col.direction, col.template_len,
                  col.psi[:col.template_len + 5], col.z[:col.template_len + 5])
    for _ in range(5):
        a = deposit_next(head, cfg)
        (b,) = deposit_group(head, cfg)
        assert a == b
        head = head.extended([a])
