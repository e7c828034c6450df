import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heisenberg_surfaces import characteristic as ch
from heisenberg_surfaces.core import to_frame_array
from heisenberg_surfaces import surface as sf
from heisenberg_surfaces import variation as vr
from heisenberg_surfaces.errors import DomainError, SingularPoint, SupportError

UNIT = ((0, 1), (0, 1))


def intrinsic(formula, domain=UNIT):
    return sf.chart_from_spec({"kind": "intrinsic_graph", "formula": formula, "domain": [list(d) for d in domain]})


@pytest.fixture(scope="module")
def control():
    chart = intrinsic("t")
    return chart, vr.SurfaceGrid(chart, grid=(201, 201))


@pytest.fixture(scope="module")
def helicoid_grid():
    h = sf.helicoid()
    return h, vr.SurfaceGrid(h, ((-1.0, 1.0), (-1.5, 1.5)), grid=(201, 201))


def center_bump(region, frac=0.35):
    (a, b), (c, d) = region
    return vr.bump((0.5 * (a + b), 0.5 * (c + d)), (frac * (b - a), frac * (d - c)), power=8)


def ambient_bump(center, radius):
    c = np.asarray(center, dtype=float)
    return lambda p: np.where(np.sum((p - c) ** 2, -1) < radius ** 2,
                              (1 - np.sum((p - c) ** 2, -1) / radius ** 2) ** 8, 0.0)


# --- quadrature and area --------------------------------------------------------

def test_simpson_weights_integrate_cubics_exactly():
    x = np.linspace(-1, 2, 7)
    w = vr.simpson_weights(x)
    assert w @ x ** 3 == pytest.approx((16 - 1) / 4, abs=1e-13)


def test_area_unit_plane_and_slanted_plane():
    assert vr.area(intrinsic("0")) == pytest.approx(1.0, abs=1e-14)
    assert vr.area(sf.vertical_plane(1.0, domain=UNIT), grid=(201, 201)) == pytest.approx(math.sqrt(2), abs=1e-10)


def test_area_simpson_order():
    exact = 0.5 * (math.sqrt(2) + math.asinh(1.0))
    chart = intrinsic("x**2/2")
    err = [abs(vr.area(chart, grid=(n, n)) - exact) for n in (9, 17, 33)]
    assert err[0] / err[1] == pytest.approx(16, abs=3)
    assert err[1] / err[2] == pytest.approx(16, abs=3)


def test_area_matches_intrinsic_integrand():
    # sub-Riemannian integrand of an intrinsic graph is (1 + (u_x + 2 u u_t)^2)^(1/2)
    chart = intrinsic("x*t + t**2/3")
    _, _, P = sf.param_grid(UNIT, (7, 7))
    x, t = P[..., 0], P[..., 1]
    u, ux, ut = x * t + t ** 2 / 3, t, x + 2 * t / 3
    assert np.allclose(vr.sub_riemannian_integrand(chart, P), np.sqrt(1 + (ux + 2 * u * ut) ** 2), atol=1e-12)


def test_area_region_outside_domain():
    with pytest.raises(DomainError):
        vr.area(intrinsic("0"), region=((0, 2), (0, 1)))


def test_riemannian_area_of_plane():
    assert vr.riemannian_area(sf.vertical_plane(1.0, domain=UNIT)) == pytest.approx(math.sqrt(2), abs=1e-10)


# --- first variation ------------------------------------------------------------

def test_graph_variation_of_zero_graph():
    assert vr.first_variation_graph(intrinsic("0"), center_bump(UNIT)) == 0.0


def test_graph_variation_vs_fd(rng):
    chart = sf.vertical_plane(1.0, domain=UNIT)
    g = vr.SurfaceGrid(chart, grid=(201, 201))
    for _ in range(3):
        phi = vr.random_bump(rng, UNIT)
        a = vr.first_variation_graph(chart, phi, grid=g)
        assert abs(a - vr.first_variation_graph_fd(chart, phi, grid=g)) <= 1e-6


def test_graph_variation_on_ruled_intrinsic_graph(rng):
    chart = sf.helicoid_intrinsic(domain=((-0.8, 0.8), (-0.8, 0.8)))
    g = vr.SurfaceGrid(chart, grid=(201, 201))
    for _ in range(3):
        assert abs(vr.first_variation_graph(chart, vr.random_bump(rng, chart.domain), grid=g)) <= 1e-6


def test_three_formulas_on_control(control):
    chart, g = control
    phi = center_bump(UNIT, 0.3)
    U = vr.GraphBumpField(phi)
    vals = [vr.first_variation_graph(chart, phi, grid=g), vr.first_variation_general(chart, U, grid=g),
            vr.first_variation_H(chart, U, grid=g), vr.first_variation_flow(chart, U, grid=g)]
    assert abs(vals[0]) > 1e-3
    assert max(vals) - min(vals) <= 1e-4


def test_nu_h_variation_on_control(control):
    chart, g = control
    U = vr.SurfaceFunctionField(center_bump(UNIT, 0.3), "nu_h")
    gen = vr.first_variation_general(chart, U, grid=g)
    assert abs(gen) > 1e-3
    assert abs(gen - vr.first_variation_H(chart, U, grid=g)) <= 1e-4


def test_tangent_field_has_no_H_variation(control):
    chart, g = control
    for d in ("z", "s"):
        assert abs(vr.first_variation_H(chart, vr.SurfaceFunctionField(center_bump(UNIT, 0.3), d), grid=g)) <= 1e-6


def test_terms_add_up(control):
    chart, g = control
    t = vr.first_variation_terms(chart, vr.GraphBumpField(center_bump(UNIT, 0.3)), grid=g)
    assert t["value"] == pytest.approx(t["S_term"] + t["J_term"] + t["div_term"], abs=1e-14)


def test_stationary_charts_general(helicoid_grid):
    h, g = helicoid_grid
    for comps in ((1, 0, 0), (0, 1, 0), (0.2, 0.3, -1.0)):
        U = vr.ConstantFrameField(ambient_bump((0, 0, 0), 1.0), comps)
        assert abs(vr.first_variation_general(h, U, grid=g)) <= 1e-4
        assert abs(vr.first_variation_flow(h, U, grid=g)) <= 1e-4
    plane = sf.vertical_plane(0.5)
    U = vr.ConstantFrameField(ambient_bump((0, 0, 0), 0.8), (0.3, -0.6, 0.5))
    assert abs(vr.first_variation_general(plane, U, grid=(201, 201))) <= 1e-4


@pytest.mark.parametrize("chart", [intrinsic("t"), sf.paraboloid(domain=((0.2, 1), (-1, 1))), sf.helicoid()])
def test_vertical_translation_is_area_preserving(chart):
    assert abs(vr.first_variation_general(chart, vr.KILLING_GENERATORS["T"], grid=(101, 101))) <= 1e-4


def test_variation_support_errors():
    chart = intrinsic("t")
    wide = vr.bump((0.5, 0.5), (0.7, 0.7))
    with pytest.raises(SupportError):
        vr.first_variation_graph(chart, wide)
    with pytest.raises(SupportError):
        vr.first_variation_general(chart, vr.GraphBumpField(wide))


def test_singular_region_rejected():
    p = sf.paraboloid()
    U = vr.SurfaceFunctionField(center_bump(((-0.5, 0.5), (-0.5, 0.5))), "nu_h")
    with pytest.raises(SingularPoint):
        vr.first_variation_general(p, U, region=((-0.5, 0.5), (-0.5, 0.5)), grid=(51, 51))


def test_stationarity_and_ruling_agree(rng):
    # straight characteristics <=> vanishing first variation; the control fails both
    for chart in (sf.vertical_plane(-0.6), sf.helicoid_intrinsic(domain=((-0.8, 0.8), (-0.8, 0.8)))):
        (a, b), (c, d) = chart.domain
        curve = ch.trace_characteristic(chart, (0.5 * (a + b), 0.5 * (c + d)), arc=(-0.5, 0.5))
        assert ch.straightness_residual(curve) <= 1e-6
        g = vr.SurfaceGrid(chart, grid=(121, 121))
        worst = max(abs(vr.first_variation_graph(chart, vr.random_bump(rng, chart.domain), grid=g))
                    for _ in range(20))
        assert worst <= 1e-5
    ctrl = intrinsic("t")
    assert ch.straightness_residual(ch.trace_characteristic(ctrl, (0.0, 0.2))) > 1e-3
    assert abs(vr.first_variation_graph(ctrl, center_bump(UNIT, 0.3))) > 1e-5


# --- mean curvature -------------------------------------------------------------

def test_mean_curvature():
    _, _, P = sf.param_grid(((-0.8, 0.8), (-0.8, 0.8)), (9, 9))
    assert np.max(np.abs(vr.mean_curvature(sf.vertical_plane(0.3), P))) <= 1e-12
    _, _, Q = sf.param_grid(((-2.5, 2.5), (-2.5, 2.5)), (9, 9))
    assert np.max(np.abs(vr.mean_curvature(sf.helicoid(), Q))) <= 1e-6
    _, _, R = sf.param_grid(UNIT, (9, 9))
    assert np.max(np.abs(vr.mean_curvature(intrinsic("t"), R))) > 1e-2
    with pytest.raises(SingularPoint):
        vr.mean_curvature(sf.paraboloid(), np.array([0.0, 0.2]))


def test_mean_curvature_along_traced_curve():
    # oracle: second-order difference of nu_h along a W-traced curve, rescaled to unit speed
    chart = intrinsic("t")
    p = np.array([0.4, 0.3])
    h = 1e-4
    c = ch.trace_characteristic(chart, p, arc=(-2 * h, 2 * h), step=h)
    ff = sf.frame_field(chart, c.params)
    tan = (c.points[3] - c.points[1]) / (2 * h)
    speed = np.linalg.norm(to_frame_array(tan, c.points[2]))
    dnu = (ff.nu_h[3] - ff.nu_h[1]) / (2 * h * speed)
    z = ff.z[2] * np.sign(to_frame_array(tan, c.points[2]) @ ff.z[2])
    assert vr.mean_curvature(chart, p) == pytest.approx(float(dnu @ z), abs=1e-6)


# --- flux ----------------------------------------------------------------------

def test_flux_of_t_on_vertical_plane():
    r = vr.flux(sf.vertical_plane(0.0), vr.rectangle(((-0.5, 0.7), (-0.4, 0.9))), vr.KILLING_GENERATORS["T"])
    assert abs(r["value"]) <= 1e-10


@pytest.mark.parametrize("name", sorted(vr.KILLING_GENERATORS))
@pytest.mark.parametrize("chart,region", [
    (sf.paraboloid(), ((0.3, 0.9), (-0.5, 0.7))),
    (sf.helicoid(), ((0.2, 2.5), (0.5, 2.0))),
    (sf.vertical_plane(1.3), ((-0.9, 0.2), (-0.3, 0.6))),
])
def test_killing_flux_vanishes(chart, region, name):
    r = vr.flux(chart, vr.rectangle(region), vr.KILLING_GENERATORS[name])
    assert abs(r["value"]) <= 1e-4 * r["perimeter"]


def test_killing_combination_and_control_flux():
    U = vr.KillingField(0.3, -1.2, 0.7)
    r = vr.flux(sf.helicoid(), vr.rectangle(((-1, 1), (-1, 1))), U)
    assert abs(r["value"]) <= 1e-4 * r["perimeter"]
    # the control is not stationary: vertical translation sees a net flux
    c = vr.flux(intrinsic("t"), vr.rectangle(((0.2, 0.8), (0.2, 0.8))), vr.KILLING_GENERATORS["T"])
    assert abs(c["value"]) > 1e-3


def test_flux_errors():
    with pytest.raises(SingularPoint):
        vr.flux(sf.paraboloid(), vr.rectangle(((-0.5, 0.5), (-0.5, 0.5))), vr.KILLING_GENERATORS["T"])


@pytest.mark.parametrize("region", [((0.2, 0.8), (0.2, 0.8)), ((0.1, 0.9), (0.3, 0.95))])
@pytest.mark.parametrize("name", sorted(vr.KILLING_GENERATORS))
def test_killing_flux_balances_interior_term(region, name):
    # isometries keep area fixed, so the boundary flux cancels the interior H-term
    chart = intrinsic("t")
    U = vr.KILLING_GENERATORS[name]
    boundary = vr.flux(chart, vr.rectangle(region), U)["value"]
    interior = vr.first_variation_H(chart, U, region=region, grid=(201, 201))
    assert abs(boundary + interior) <= 1e-8


# --- divergence identity ----------------------------------------------------------

def test_divergence_identity_with_zero():
    f = center_bump(((-0.8, 0.8), (-0.8, 0.8)))
    plane = sf.vertical_plane(0.0)
    assert vr.divergence_identity_residual(plane, vr.ZERO, f, grid=(51, 51)) == 0.0
    assert vr.divergence_identity_residual(plane, f, vr.ZERO, grid=(51, 51)) == 0.0


def test_divergence_identity_random(rng, helicoid_grid):
    plane = sf.vertical_plane(0.0)
    reg = ((-0.8, 0.8), (-0.8, 0.8))
    gp = vr.SurfaceGrid(plane, reg, grid=(201, 201))
    for _ in range(3):
        assert vr.divergence_identity_residual(plane, vr.random_bump(rng, reg), vr.random_bump(rng, reg),
                                               grid=gp) <= 1e-6
    h, gh = helicoid_grid
    for _ in range(3):
        assert vr.divergence_identity_residual(h, vr.random_bump(rng, gh.region), vr.random_bump(rng, gh.region),
                                               grid=gh) <= 1e-4


def test_divergence_identity_control_is_nonzero_without_u_term(control):
    # dropping the 2 u f Z(g) term breaks the identity on a surface with <N,T> != 0
    chart, g = control
    f = center_bump(UNIT, 0.3)
    fs, fv = g.on_stencil(f), f(g.params)
    zf, zzf = g.z_derivative(fs), g.z_second_derivative(fs)
    without = g.integrate((zf * zf + fv * zzf) * g.sub_riemannian_element)
    assert abs(without) > 1e-3
    assert vr.divergence_identity_residual(chart, f, f, grid=g) <= 1e-6


# --- q ---------------------------------------------------------------------------

def test_q_function_values():
    _, _, P = sf.param_grid(((-0.8, 0.8), (-0.8, 0.8)), (7, 7))
    assert np.max(np.abs(vr.q_function(sf.vertical_plane(2.0), P))) <= 1e-10
    eps = np.linspace(-2, 2, 5)
    h = sf.helicoid()
    assert np.allclose(vr.q_function(h, np.stack([eps, 0 * eps], -1)), 4.0, atol=1e-5)
    assert np.allclose(vr.q_function(h, np.stack([eps, 1 + 0 * eps], -1)), 1.0, atol=1e-5)
    with pytest.raises(SingularPoint):
        vr.q_function(sf.paraboloid(), np.array([0.0, 0.1]))


def test_q_ruled_cross_check():
    assert vr.q_ruled_cross_check(sf.helicoid(), 0.4, np.linspace(-2.5, 2.5, 51)) <= 1e-5


# --- stability ---------------------------------------------------------------------

def test_plane_stability(rng):
    plane = sf.vertical_plane(0.0)
    reg = ((-0.8, 0.8), (-0.8, 0.8))
    g = vr.SurfaceGrid(plane, reg, grid=(101, 101))
    for _ in range(10):
        r = vr.stability_form(plane, vr.random_bump(rng, reg), grid=g)
        assert r.Q_value >= -1e-10
        assert r.Q_value == r.gradient_term - r.q_term
        assert r.verdict == "nonnegative"


def test_stability_of_zero_function():
    r = vr.stability_form(sf.helicoid(), vr.ZERO, region=((-1, 1), (-1, 1)), grid=(51, 51))
    assert r.Q_value == 0.0


@pytest.fixture(scope="module")
def sweep():
    return vr.instability_search(sf.helicoid(), k_max=64)


def test_instability_search_helicoid(sweep):
    assert sweep.verdict == "negative"
    assert sweep.first_negative_k is not None and sweep.first_negative_k <= 64
    assert sweep.q_check <= 1e-6
    for ratio in sweep.gradient_ratios.values():
        assert ratio == pytest.approx(0.5, rel=0.2)
    for r in sweep.reports:
        assert r.Q_value == r.gradient_term - r.q_term


def test_instability_search_vertical_plane():
    res = vr.instability_search(sf.ruled_vertical_plane(0.5))
    assert res.verdict == "q_zero"
    assert res.reports == []


def test_reduced_form_equals_direct_form(sweep):
    # the reduced index form and the direct quadratic form agree on f = u_k / v
    h = sf.helicoid(domain=((-1.2, 1.2), (-3.0, 3.0)))
    phi = vr.Bump1D(0.0, 1.0, "poly")
    for k in (1, 2):
        region = ((-1.1, 1.1), (-k - 0.2, k + 0.2))
        direct = vr.stability_form(h, vr.index_test_function(h, phi, k), region=region, grid=(201, 201))
        reduced = sweep.reports[k - 1]
        assert direct.Q_value == pytest.approx(reduced.Q_value, abs=1e-6)
    assert sweep.reports[0].Q_value > 0 > sweep.reports[1].Q_value


def test_instability_support_error():
    with pytest.raises(SupportError):
        vr.instability_search(sf.helicoid(domain=((-0.5, 0.5), (-3, 3))), k_max=2)


# --- test functions and reports ------------------------------------------------------

@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
@settings(max_examples=30)
def test_bump_gradient_matches_fd(x, y):
    b = vr.bump((0.1, -0.2), (0.7, 0.6), power=4)
    fd = vr.TestFunction(b.func)
    p = np.array([x, y])
    assert np.allclose(b.gradient(p), fd.gradient(p), atol=1e-7)


def test_bump1d_vanishes_outside():
    b = vr.Bump1D(0.0, 1.0, "poly")
    assert b(np.array([-1.0, 1.0, 2.0])).tolist() == [0.0, 0.0, 0.0]
    assert b(0.0) == 1.0
    s = vr.Bump1D(0.0, 1.0, "smooth")
    assert s(0.0) == pytest.approx(1.0) and s(1.0) == 0.0


def test_report_json_format():
    rep = vr.make_report("helicoid", ((0, 1), (0, 1)), "area", 1 / 3, {"x": np.float64(2 / 3)}, (11, 11),
                         {"tol": 1e-6}, "ok")
    data = json.loads(vr.report_json(rep))
    assert set(data) == {"surface", "region", "operation", "value", "terms", "grid", "tolerances", "verdict"}
    assert data["value"] == 0.333333333
    assert data["terms"]["x"] == 0.666666667
