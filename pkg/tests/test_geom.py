import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import shapes as S
from darboux.geom import (
    ArcLengthTable,
    DomainError,
    RegularityError,
    StationaryPointError,
    UnitSpeedError,
    arc_length,
    curve_s_derivatives,
    first_form,
    frame_residuals,
    frame_sample,
    metric_identities,
    reparametrize_arclength,
    sample_curve,
    second_form,
    unit_normal,
)

# -- fundamental forms ------------------------------------------------------------


@pytest.mark.parametrize("u,v", [(0.0, 0.0), (1.3, -2.0), (-0.4, 0.9)])
def test_plane_first_form(u, v):
    I = first_form(S.plane, u, v)
    assert (I.E, I.F, I.G) == (1.0, 0.0, 1.0)
    assert (I.E_u, I.E_v, I.F_u, I.F_v, I.G_u, I.G_v) == (0.0,) * 6


@pytest.mark.parametrize("u,v", [(0.2, 0.5), (-1.0, -0.8), (2.5, 0.0)])
def test_catenoid_and_helicoid_share_first_form(u, v):
    c = first_form(S.catenoid, u, v)
    h = first_form(S.helicoid, u, v)
    assert c.E == pytest.approx(math.cosh(v) ** 2, rel=1e-14)
    assert c.G == pytest.approx(math.cosh(v) ** 2, rel=1e-14)
    assert abs(c.F) <= 1e-15
    for name in ("E", "F", "G", "E_u", "E_v", "F_u", "F_v", "G_u", "G_v"):
        assert abs(getattr(c, name) - getattr(h, name)) <= 1e-12
    assert c.E_v == pytest.approx(2 * math.cosh(v) * math.sinh(v), abs=1e-14)


def test_degenerate_point_reports_location():
    pole = S.patch("sin(v)*cos(u)", "sin(v)*sin(u)", "cos(v)", name="sphere")
    with pytest.raises(RegularityError) as info:
        first_form(pole, 0.7, 0.0)
    assert (info.value.u, info.value.v) == (0.7, 0.0)
    assert "sphere" in str(info.value)


def test_unit_normal_plane():
    assert unit_normal(S.plane, 0.3, -0.2).tolist() == [0.0, 0.0, 1.0]


@pytest.mark.parametrize("u,v", [(0.3, 0.8), (-2.0, 1.5), (1.0, 2.5)])
def test_sphere_normal_is_radial(u, v):
    U = unit_normal(S.sphere, u, v)
    p = S.sphere.point(u, v)
    assert abs(np.linalg.norm(U) - 1.0) <= 1e-12
    # this parametrization orders (u, v) so the normal points inward
    assert np.abs(U + p).max() <= 1e-10


@pytest.mark.parametrize("u,v", [(0.3, 0.8), (-2.0, 1.5), (1.0, 2.5)])
def test_cone_normal_is_orthogonal_to_position(u, v):
    assert abs(unit_normal(S.cone, u, v) @ S.cone.point(u, v)) <= 1e-10


def test_plane_second_form_vanishes():
    II = second_form(S.plane, 0.2, 0.1)
    assert (II.L, II.M, II.N2) == (0.0, 0.0, 0.0)


@settings(max_examples=50)
@given(u=st.floats(-3, 3), v=st.floats(0.3, 2.8), phi=st.floats(0, 2 * math.pi))
def test_sphere_is_umbilic(u, v, phi):
    I, II = first_form(S.sphere, u, v), second_form(S.sphere, u, v)
    # unit tangent direction in coordinates: E u'^2 + G v'^2 = 1
    up, vp = math.cos(phi) / math.sqrt(I.E), math.sin(phi) / math.sqrt(I.G)
    assert II.contract(up, vp) == pytest.approx(1.0, abs=1e-10)


def test_cylinder_second_form():
    a = 2.0
    II = second_form(S.cylinder2, 0.4, 1.0)
    U = unit_normal(S.cylinder2, 0.4, 1.0)
    assert U == pytest.approx([math.cos(0.4), math.sin(0.4), 0.0])
    assert II.L == pytest.approx(-a, abs=1e-14)
    assert abs(II.M) <= 1e-15 and abs(II.N2) <= 1e-15


@settings(max_examples=40)
@given(u=st.floats(-1, 1), v=st.floats(-1, 1))
def test_metric_derivative_identities(u, v):
    for p in (S.stereo, S.helicoid, S.catenoid, S.paraboloid):
        assert max(metric_identities(p, u, v).values()) <= 1e-10


# -- curve derivatives ----------------------------------------------------------------


@pytest.mark.parametrize("t", [0.0, 0.8, 2.0, 4.1])
def test_unit_circle_derivatives(t):
    d = curve_s_derivatives(S.plane, S.circle, t)
    assert d.sigma == pytest.approx(1.0, abs=1e-15)
    assert d.up == pytest.approx(-math.sin(t), abs=1e-15)
    assert d.upp == pytest.approx(-math.cos(t), abs=1e-15)
    assert d.vp == pytest.approx(math.cos(t), abs=1e-15)
    assert d.vpp == pytest.approx(-math.sin(t), abs=1e-15)


@pytest.mark.parametrize("b", [0.5, 1.0, 3.0])
def test_helix_speed(b):
    a = 2.0
    helix = S.curve("t", f"{b}*t", -1, 1)
    d = curve_s_derivatives(S.cylinder2, helix, 0.3)
    assert d.sigma == pytest.approx(math.sqrt(a * a + b * b), rel=1e-14)
    assert d.up == pytest.approx(1 / math.sqrt(a * a + b * b), rel=1e-14)


curves_on = [
    (S.plane, S.arc),
    (S.cone, S.spiral),
    (S.helicoid, S.hel_line),
    (S.stereo, S.drift),
    (S.sphere, S.curve("t", "1 + 0.5*sin(t)", -2, 2)),
]


@pytest.mark.parametrize("patch,curve", curves_on)
@pytest.mark.parametrize("frac", [0.0, 0.37, 1.0])
def test_unit_speed_in_metric(patch, curve, frac):
    t = curve.t0 + frac * (curve.t1 - curve.t0)
    d = curve_s_derivatives(patch, curve, t)
    I = first_form(patch, d.u, d.v)
    assert I.E * d.up**2 + 2 * I.F * d.up * d.vp + I.G * d.vp**2 == pytest.approx(1.0, abs=1e-9)


def test_stationary_point():
    c = S.curve("t^2", "0", -1, 1)
    with pytest.raises(StationaryPointError):
        curve_s_derivatives(S.plane, c, 0.0)


def test_unit_speed_assertion():
    c = S.curve("2*t", "0", 0, 1, mode="assert-unit-speed")
    with pytest.raises(UnitSpeedError):
        curve_s_derivatives(S.plane, c, 0.5)


def test_curve_leaving_domain():
    c = S.curve("t", "0", 0, 10)
    with pytest.raises(DomainError):
        frame_sample(S.plane, c, 5.0, 0.0)


# -- frames ----------------------------------------------------------------------


def test_great_circle():
    fs = frame_sample(S.sphere, S.equator, 0.4, 0.0)
    assert fs.kappa == pytest.approx(1.0, abs=1e-12)
    assert abs(fs.kappa_g) <= 1e-12
    assert abs(fs.kappa_n) == pytest.approx(1.0, abs=1e-12)
    assert abs(fs.tau_g) <= 1e-12


@pytest.mark.parametrize("t", [0.0, 1.0, 3.0])
def test_plane_circle(t):
    fs = frame_sample(S.plane, S.circle, t, t)
    assert fs.kappa == pytest.approx(1.0, abs=1e-14)
    # counterclockwise in the (u, v) chart with upward normal
    assert fs.kappa_g == pytest.approx(1.0, abs=1e-14)
    assert fs.kappa_n == 0.0 and fs.tau_g == 0.0


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_helix_on_unit_cylinder(b):
    helix = S.curve("t", f"{b}*t", -1, 1)
    fs = frame_sample(S.cylinder, helix, 0.2, 0.0)
    assert fs.kappa == pytest.approx(1 / (1 + b * b), abs=1e-12)
    assert abs(fs.kappa_g) <= 1e-12
    assert abs(fs.kappa_n) == pytest.approx(1 / (1 + b * b), abs=1e-12)
    # geodesic torsion of a cylinder helix is b / (1 + b^2) in magnitude
    assert abs(fs.tau_g) == pytest.approx(b / (1 + b * b), abs=1e-12)


def test_straight_line_is_flagged_not_rejected():
    line = S.curve("t", "2*t", -1, 1)
    fs = frame_sample(S.plane, line, 0.5, 0.0)
    assert fs.degenerate and fs.N is None and fs.B is None and fs.alpha is None
    assert fs.kappa_g == 0.0 and fs.kappa_n == 0.0
    res = frame_residuals(fs)
    assert "frenet_orthonormality" not in res and res["darboux_orthonormality"] <= 1e-15


@pytest.mark.parametrize("patch,curve", curves_on)
def test_frame_invariants(patch, curve):
    for fs in sample_curve(patch, curve, 12):
        r = frame_residuals(fs)
        assert r["darboux_orthonormality"] <= 1e-9
        assert r["frenet_orthonormality"] <= 1e-9
        assert r["P=UxT"] <= 1e-9
        assert r["pythagoras_rel"] <= 1e-8
        assert r["rotation"] <= 1e-8
        assert r["kappa_n_routes"] <= 1e-9
        assert r["B_routes"] <= 1e-9
        assert r["P_routes"] <= 1e-9


def test_kappa_matches_ambient_formula():
    fs = frame_sample(S.stereo, S.drift, 0.6, 0.0)
    d = fs.derivs
    # kappa from dgamma/dt and d2gamma/dt2 of the composite map
    uj, vj = S.drift.coords(0.6, 2)
    g = S.stereo.eval_along(uj, vj)
    g1 = np.array([c.c[1] for c in g])
    g2 = np.array([c.c[2] for c in g])
    assert fs.kappa == pytest.approx(np.linalg.norm(np.cross(g1, g2)) / np.linalg.norm(g1) ** 3, rel=1e-12)
    assert d.sigma == pytest.approx(np.linalg.norm(g1), rel=1e-14)


# -- arc length -----------------------------------------------------------------


def test_unit_speed_inverse_is_shift():
    table = ArcLengthTable(S.plane, S.circle)
    for s in np.linspace(0, 2 * math.pi, 7):
        assert table.t_of_s(s) == pytest.approx(s, abs=1e-9)
    assert table.length == pytest.approx(2 * math.pi, abs=1e-9)


def test_constant_speed_two():
    c = S.curve("2*t", "0", -1, 0.5)
    table = ArcLengthTable(S.plane, c)
    assert table.length == pytest.approx(3.0, abs=1e-12)
    for s in (0.0, 0.7, 2.2, 3.0):
        assert table.t_of_s(s) == pytest.approx(-1 + s / 2, abs=1e-9)


def test_ellipse_length_against_quadrature():
    ellipse = S.curve("2*cos(t)", "sin(t)", 0, 2 * math.pi)
    ref, err = quad(lambda t: math.hypot(2 * math.sin(t), math.cos(t)), 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert err < 1e-11
    assert ArcLengthTable(S.plane, ellipse).length == pytest.approx(ref, abs=1e-8)
    assert arc_length(S.plane, ellipse, 0, 2 * math.pi) == pytest.approx(ref, abs=1e-8)


def test_reparametrization_is_reproducible_and_even():
    pairs = reparametrize_arclength(S.cone, S.spiral, 9)
    again = reparametrize_arclength(S.cone, S.spiral, 9)
    assert pairs == again
    table = ArcLengthTable(S.cone, S.spiral)
    for s, t in pairs:
        assert table.s_of_t(t) == pytest.approx(s, abs=1e-9)
    steps = np.diff([s for s, _ in pairs])
    assert np.ptp(steps) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(s_frac=st.floats(0, 1))
def test_t_of_s_inverts_s_of_t(s_frac):
    table = ArcLengthTable(S.stereo, S.drift)
    s = s_frac * table.length
    assert table.s_of_t(table.t_of_s(s)) == pytest.approx(s, abs=1e-9)


def test_non_monotone_arc_length_rejected():
    # speed vanishes at t = 0.25, a quadrature node
    c = S.curve("(t - 0.25)^2", "0", 0, 1)
    with pytest.raises(StationaryPointError):
        ArcLengthTable(S.plane, c)
