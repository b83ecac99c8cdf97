import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import shapes as S
from darboux.geom import CurveDerivatives, FirstForm, sample_curve
from darboux.jets import Jet2
from darboux.oracle import fd_first_form
from darboux.theorems import (
    CHECKERS,
    PreconditionError,
    SubCheck,
    TheoremReport,
    check_frames,
    check_metric_identities,
    check_partials,
    check_T31,
    check_T32,
    check_T33,
    check_T34,
    check_T41,
    check_T42,
    check_T43,
    check_T44,
    compute_A,
    compute_psi,
    monge_scale,
    normalized,
    prepare,
)

TOL = 1e-7
line = S.curve("t", "0.5*t + 0.2", -1, 1, name="straight")
latitude = S.curve("t", "1", -2, 2, name="latitude")


def derivs(up, upp, vp, vpp):
    return CurveDerivatives(0.0, 0.0, 0.0, up, upp, vp, vpp, 1.0, 0.0, up, upp, vp, vpp)


# -- closed forms ---------------------------------------------------------------


def test_A_is_one_on_unit_circle():
    for fs in sample_curve(S.plane, S.circle):
        assert compute_A(fs.first, fs.derivs) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize(
    "patch,curve",
    [(S.plane, S.arc), (S.cone, S.spiral), (S.sphere, latitude), (S.stereo, S.drift), (S.catenoid, S.hel_line), (S.cylinder, S.helix)],
)
def test_kappa_normal_component_equals_mu_A(patch, curve):
    samples = sample_curve(patch, curve)
    from darboux.rectify import decompose_position

    dec = decompose_position(samples)
    for fs, lam, mu in zip(samples, dec.lam, dec.mu):
        if fs.degenerate:
            continue
        g_tan = lam * fs.T + mu * fs.P
        assert normalized(fs.kappa * float(g_tan @ fs.N), mu * compute_A(fs.first, fs.derivs)) <= 1e-9


@settings(max_examples=50)
@given(
    up=st.floats(-2, 2), upp=st.floats(-5, 5), vp=st.floats(-2, 2), vpp=st.floats(-5, 5)
)
def test_A_on_orthonormal_chart_is_signed_curvature(up, upp, vp, vpp):
    I = FirstForm(1.0, 0.0, 1.0, 0, 0, 0, 0, 0, 0)
    assert compute_A(I, derivs(up, upp, vp, vpp)) == pytest.approx(up * vpp - upp * vp, abs=1e-12)


@settings(max_examples=50)
@given(
    E=st.floats(0.2, 4), G=st.floats(0.2, 4), r=st.floats(0.2, 3), ru=st.floats(-2, 2), rv=st.floats(-2, 2),
    up=st.floats(-2, 2), vp=st.floats(-2, 2), kappa=st.floats(0.1, 5), mu=st.floats(-3, 3),
)
def test_psi_orthogonal_chart(E, G, r, ru, rv, up, vp, kappa, mu):
    I = FirstForm(E, 0.0, G, 0, 0, 0, 0, 0, 0)
    rho = Jet2((r, ru, rv, 0, 0, 0))
    want = mu / (kappa * math.sqrt(E * G)) * (
        up**3 * E * E * r * rv - up**2 * vp * E * G * r * ru + up * vp**2 * E * G * r * rv - vp**3 * G * G * r * ru
    )
    got = compute_psi(I, rho, derivs(up, 0, vp, 0), kappa, mu)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_psi_vanishes_for_constant_rho():
    mc = prepare(S.corr(S.cone, S.cone2), S.spiral)
    for ps in mc.samples:
        fs = ps.source
        rho = mc.corr.rho_jet(fs.u, fs.v)
        assert compute_psi(fs.first, rho, fs.derivs, fs.kappa, ps.mu) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("curve", [S.drift, S.small_circle])
def test_psi_matches_finite_difference_route(curve):
    # psi = mu (rho^2 A - A_bar) / kappa with A_bar from a differenced target metric
    corr = S.corr(S.plane_unit, S.stereo, "2/(1 + u^2 + v^2)")
    mc = prepare(corr, curve)
    for ps in mc.samples:
        fs = ps.source
        psi = compute_psi(fs.first, corr.rho_jet(fs.u, fs.v), fs.derivs, fs.kappa, ps.mu)
        A_bar = compute_A(fd_first_form(S.stereo, fs.u, fs.v, 1e-5), fs.derivs)
        r2 = 4 / (1 + fs.u**2 + fs.v**2) ** 2
        brute = ps.mu * (r2 * compute_A(fs.first, fs.derivs) - A_bar) / fs.kappa
        assert psi == pytest.approx(brute, abs=1e-6)


# -- isometry checkers ------------------------------------------------------------


def test_T31_plane_to_cylinder():
    rep = check_T31(S.corr(S.plane, S.cylinder), S.arc)
    assert rep.passed
    assert rep.sub("coefficients").max <= 1e-9
    # the position itself is not in the image rectifying plane
    assert rep.sub("strict_position").max == pytest.approx(1.0, abs=1e-9)
    assert not rep.sub("strict_position").gating


def test_T31_needs_rectifying_source():
    with pytest.raises(PreconditionError):
        check_T31(S.corr(S.helicoid, S.catenoid), S.hel_line)


def test_T31_needs_isometry():
    with pytest.raises(PreconditionError):
        check_T31(S.corr(S.cone, S.cone2), S.spiral)


@pytest.mark.parametrize(
    "corr,curve",
    [
        (S.identity(S.plane), S.circle),
        (S.corr(S.plane, S.cylinder), S.circle),
        (S.corr(S.helicoid, S.catenoid), S.hel_line),
        (S.identity(S.cone), S.spiral),
    ],
)
def test_isometry_theorems(corr, curve):
    rng = np.random.default_rng(11)
    for rep in (
        check_T32(corr, curve, rng=rng),
        check_T33(corr, curve),
        check_T34(corr, curve),
    ):
        assert rep.passed, rep.summary()
        assert rep.max <= TOL


def test_T33_subchecks_on_helicoid():
    rep = check_T33(S.corr(S.helicoid, S.catenoid), S.hel_line)
    assert rep.sub("unconditional").max <= TOL
    assert rep.sub("relation").max <= TOL
    assert "tangential_part" in rep.notes


def test_T34_both_subchecks():
    rep = check_T34(S.corr(S.plane, S.cylinder), S.circle)
    assert rep.sub("source_identity").max <= TOL
    assert rep.sub("difference").max <= TOL


def test_T34_opposite_sign_fails_where_normal_curvature_is_nonzero():
    rep = check_T34(S.identity(S.cylinder), S.helix)
    assert rep.passed
    assert rep.notes["opposite_sign_max_residual"] > 0.1


def test_corollaries_on_identity():
    rep3 = check_T33(S.identity(S.cone), S.spiral)
    rep4 = check_T34(S.identity(S.cone), S.spiral)
    assert rep3.notes["corollary_samples"] == rep3.total
    assert rep3.sub("equal_curvature").max <= 1e-9
    assert rep4.sub("equal_ratio").max <= 1e-9


def test_straight_line_is_a_precondition_error():
    with pytest.raises(PreconditionError):
        check_T33(S.identity(S.plane), line)
    with pytest.raises(PreconditionError):
        check_T43(S.identity(S.plane), line)


def test_isometry_checker_rejects_conformal_map():
    with pytest.raises(PreconditionError):
        check_T32(S.corr(S.plane_unit, S.stereo), S.drift)


# -- conformal checkers -----------------------------------------------------------


def test_T41_cone_homothety():
    rep = check_T41(S.corr(S.cone, S.cone3), S.spiral)
    assert rep.sub("coefficients").max <= 1e-9
    assert rep.passed
    assert rep.notes["map_kind"] == "homothety"


def test_T41_stereographic_small_circle():
    # a circle about the origin of the plane is rectifying
    rep = check_T41(S.corr(S.plane_unit, S.stereo), S.small_circle)
    assert rep.sub("coefficients").max <= 1e-9


@pytest.mark.parametrize("curve", [S.drift, S.small_circle])
@pytest.mark.parametrize("rho", [None, "2/(1 + u^2 + v^2)"])
def test_conformal_theorems_on_stereographic(curve, rho):
    corr = S.corr(S.plane_unit, S.stereo, rho)
    assert check_T42(corr, curve, rng=np.random.default_rng(1)).max <= TOL
    rep = check_T43(corr, curve)
    assert rep.sub("unconditional").max <= TOL
    assert rep.sub("unconditional_algebraic").max <= TOL


def test_T44_paraboloid():
    rep = check_T44(S.corr(S.paraboloid, S.paraboloid2), S.drift)
    assert rep.passed
    assert rep.sub("per_surface_identity").max <= TOL
    assert rep.sub("difference").max <= TOL
    assert not rep.sub("literal_W2").gating


def test_T44_requires_monge_patches():
    with pytest.raises(PreconditionError):
        check_T44(S.corr(S.cone, S.cone2), S.spiral)


def test_monge_scale():
    grid = [(0.1, 0.2), (-0.5, 0.3)]
    assert monge_scale(S.paraboloid2, grid) == 2.0
    with pytest.raises(PreconditionError):
        monge_scale(S.sphere, [(0.1, 1.0)])


def test_partials_check():
    assert check_partials(S.corr(S.plane_unit, S.stereo, "2/(1 + u^2 + v^2)")).max <= TOL
    assert check_partials(S.corr(S.helicoid, S.catenoid)).max <= TOL


# -- specialization chain ---------------------------------------------------------


@pytest.mark.parametrize("corr,curve", [(S.corr(S.helicoid, S.catenoid), S.hel_line), (S.identity(S.cone), S.spiral)])
def test_conformal_checks_reduce_to_isometry_checks(corr, curve):
    mc = prepare(corr, curve)
    a = check_T32(corr, curve, rng=np.random.default_rng(5), mapped=mc).residuals
    b = check_T42(corr, curve, rng=np.random.default_rng(5), mapped=mc).residuals
    assert np.abs(np.subtract(a, b)).max() <= 1e-10
    t43 = check_T43(corr, curve, mapped=mc)
    assert t43.sub("conditional").max <= 1e-10
    for ps in mc.samples:
        assert ps.rho_hat == pytest.approx(1.0, abs=1e-10)


def test_T41_on_isometry_matches_T31():
    corr = S.identity(S.cone)
    mc = prepare(corr, S.spiral)
    a = check_T31(corr, S.spiral, mapped=mc).residuals
    b = check_T41(corr, S.spiral, mapped=mc).residuals
    assert a == b


# -- reports ------------------------------------------------------------------------


def test_seed_determinism():
    corr = S.corr(S.helicoid, S.catenoid)
    one = check_T32(corr, S.hel_line, rng=np.random.default_rng([4, 2])).residuals
    two = check_T32(corr, S.hel_line, rng=np.random.default_rng([4, 2])).residuals
    assert one == two


def test_skip_fraction_over_limit_fails():
    sub = SubCheck("x", [0.0] * 12, 1e-7)
    assert TheoremReport("T3.3", [sub], skipped=3, total=15).verdict == "pass"
    assert TheoremReport("T3.3", [sub], skipped=4, total=16).verdict == "fail"


def test_non_gating_subcheck_does_not_decide():
    rep = TheoremReport("T", [SubCheck("a", [0.0], 1.0), SubCheck("b", [5.0], 1.0, gating=False)], total=1)
    assert rep.passed
    assert rep.summary()["subchecks"]["b"]["passed"] is False


def test_frames_check_reports_degenerate_samples():
    rep = check_frames(S.plane, line)
    assert rep.passed
    assert rep.notes["degenerate_samples"] == rep.total


def test_metric_identity_check():
    grid = [(u, v) for u in (-0.5, 0.5) for v in (0.5, 1.5)]
    assert check_metric_identities(S.sphere, grid).max <= 1e-10


def test_checker_table():
    assert sorted(CHECKERS) == ["T3.1", "T3.2", "T3.3", "T3.4", "T4.1", "T4.2", "T4.3", "T4.4"]
