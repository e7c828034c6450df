import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from heisenberg_surfaces import characteristic as ch
from heisenberg_surfaces import codazzi as cz
from heisenberg_surfaces import surface as sf
from heisenberg_surfaces.errors import HeisenbergError, NotACodazziProfile, PoleAt, PolynomialRoot

coef = st.floats(-2, 2, allow_nan=False)


def helicoid_u(s):
    return s / (1 + s * s)


def test_solution_examples():
    assert cz.codazzi_solution(cz.CodazziCoeffs(0, 0), np.linspace(-5, 5, 11)).tolist() == [0.0] * 11
    assert cz.codazzi_solution(cz.CodazziCoeffs(0.7, -0.2), 0.0) == 0.7
    assert cz.codazzi_solution(cz.CodazziCoeffs(0, 1), 1.0) == pytest.approx(0.5, abs=1e-15)


def test_solution_pole():
    # a = 1, b = -1: denominator (1 + s)^2 vanishes at s = -1
    with pytest.raises(PoleAt) as exc:
        cz.codazzi_solution(cz.CodazziCoeffs(1, -1), -1.0)
    assert exc.value.s == -1.0


@given(coef, coef)
def test_solution_initial_conditions(a, b):
    c = cz.CodazziCoeffs(a, b)
    h = 1e-5
    assume(np.min(np.abs(c.denominator(np.array([-h, 0, h])))) > 1e-3)
    assume(np.all(np.abs(c.poles()) > 0.1))
    assert abs(cz.codazzi_solution(c, 0.0) - a) <= 1e-12
    d = (cz.codazzi_solution(c, h) - cz.codazzi_solution(c, -h)) / (2 * h)
    assert abs(d - b) <= 1e-8 * max(1.0, (abs(a) + abs(b)) ** 3)


@given(coef, coef)
def test_pole_filter(a, b):
    c = cz.CodazziCoeffs(a, b)
    assume(not (a == 0 and b == 0))
    if a * a + b <= 0:
        assert not c.globally_defined
        poles = c.poles()
        assert len(poles) >= 1
        window = np.linspace(poles[0] - 1e-3, poles[0] + 1e-3, 2001)
        assert np.min(np.abs(c.denominator(window))) <= 1e-5 * (1 + abs(2 * a * a + b))
    else:
        assert c.globally_defined
        assert len(c.poles()) == 0


def test_pole_filter_detects_pole_on_grid():
    c = cz.CodazziCoeffs(1.0, -1.0)
    with pytest.raises(PoleAt):
        cz.solution_profile(c, (-5, 5), 1001)


@given(coef, coef)
def test_reciprocal_relation(a, b):
    assume(a * a + b > 0.05)
    c = cz.CodazziCoeffs(a, b)
    s = np.linspace(-3, 3, 61)
    prod = cz.q_along_line(c, s) * c.denominator(s) ** 2 / 4
    assert np.max(np.abs(prod - (a * a + b))) <= 1e-10 * max(1, a * a + abs(b))


def test_q_along_line_examples():
    assert np.all(cz.q_along_line(cz.CodazziCoeffs(0, 0), np.linspace(-3, 3, 7)) == 0)
    assert cz.q_along_line(cz.CodazziCoeffs(0, 1), 0.0) == pytest.approx(4.0)
    assert cz.q_along_line(cz.CodazziCoeffs(0, 1), 1.0) == pytest.approx(1.0)


def test_residual_of_exact_solution():
    prof = cz.solution_profile(cz.CodazziCoeffs(0, 1), (-3, 3), 601)
    assert prof.step == pytest.approx(0.01)
    assert cz.codazzi_residual(prof) <= 1e-5


def test_residual_zero_profile_and_helicoid_line():
    s = np.linspace(-3, 3, 601)
    assert cz.codazzi_residual(cz.CurveProfile(s, 0 * s)) == 0.0
    prof = cz.ruling_profile(sf.helicoid(), 0.0, s)
    assert np.max(np.abs(prof.values - helicoid_u(s))) <= 1e-12
    assert cz.codazzi_residual(prof) <= 1e-5


def test_residual_detects_non_solution():
    s = np.linspace(-1, 1, 201)
    assert cz.codazzi_residual(cz.CurveProfile(s, s)) > 1.0


def test_residual_needs_five_samples():
    with pytest.raises(HeisenbergError):
        cz.codazzi_residual(cz.CurveProfile(np.arange(4.0), np.zeros(4)))


def test_profile_validation():
    with pytest.raises(HeisenbergError):
        cz.CurveProfile(np.array([0.0, 0.1, 0.3]), np.zeros(3))
    with pytest.raises(HeisenbergError):
        cz.CurveProfile(np.linspace(0, 1, 3), np.zeros(4))
    with pytest.raises(HeisenbergError):
        cz.CurveProfile(np.linspace(0, 1, 3), np.zeros(3), label="w")


def test_profile_csv_round_trip(tmp_path):
    prof = cz.solution_profile(cz.CodazziCoeffs(0.5, 0.5), (-1, 1), 21)
    prof.to_csv(tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_text().splitlines()[0] == "s,value,label"
    back = cz.CurveProfile.from_csv(tmp_path / "u.csv")
    assert back.label == "u"
    assert np.allclose(back.values, prof.values, atol=1e-8)


def test_fit_examples():
    s = np.linspace(-3, 3, 601)
    c = cz.fit_codazzi_coeffs(cz.CurveProfile(s, helicoid_u(s)))
    assert abs(c.a) <= 1e-6 and abs(c.b - 1) <= 1e-6
    z = cz.fit_codazzi_coeffs(cz.ruling_profile(sf.ruled_vertical_plane(0.3), 0.0, np.linspace(-1, 1, 201)))
    assert abs(z.a) <= 1e-12 and abs(z.b) <= 1e-12
    # a = 2, b = -3: poles of 1 + 4s + 5s^2 are complex
    r = cz.fit_codazzi_coeffs(cz.solution_profile(cz.CodazziCoeffs(2, -3), (-2, 2), 401))
    assert abs(r.a - 2) <= 1e-6 and abs(r.b + 3) <= 1e-6


@given(st.floats(-1, 1), st.floats(0.2, 3))
def test_fit_round_trip(a, m):
    b = m - a * a
    r = cz.fit_codazzi_coeffs(cz.solution_profile(cz.CodazziCoeffs(a, b), (-2, 2), 401))
    assert abs(r.a - a) <= 1e-6 and abs(r.b - b) <= 1e-6


def test_fit_rejects_non_solution():
    s = np.linspace(-2, 2, 401)
    with pytest.raises(NotACodazziProfile):
        cz.fit_codazzi_coeffs(cz.CurveProfile(s, np.sin(s)))
    with pytest.raises(HeisenbergError):
        cz.fit_codazzi_coeffs(cz.CurveProfile(np.linspace(1, 2, 11), np.zeros(11)))


def test_fit_on_traced_helicoid_characteristic():
    h = sf.helicoid()
    c = ch.trace_characteristic(h, (0.6, 0.0), arc=(-2, 2), step=1e-2)
    r = cz.fit_codazzi_coeffs(cz.curve_profile(h, c))
    assert abs(r.a) <= 1e-6 and abs(r.b - 1) <= 1e-6


@pytest.mark.parametrize("chart,starts,expected", [
    (sf.helicoid(), [(0.0, 0.5), (1.0, -1.0), (-2.0, 0.3)], "positive"),
    (sf.vertical_plane(0.4), [(0.0, 0.0), (0.3, -0.5)], "zero"),
    # these lines run into the singular line x = 0: a^2 + b < 0, so q < 0 throughout
    (sf.paraboloid(), [(0.5, 0.0), (0.7, 0.6), (-0.6, 0.2)], "negative"),
])
def test_q_single_sign_on_stationary_lines(chart, starts, expected):
    for start in starts:
        c = ch.trace_characteristic(chart, start, arc=(-0.3, 0.3), step=1e-2)
        prof = cz.curve_profile(chart, c)
        assert cz.q_dichotomy(cz.q_profile(prof).values) == expected
        fit = cz.fit_codazzi_coeffs(prof)
        assert (fit.invariant > 0) == (expected == "positive")


def test_q_dichotomy_labels():
    assert cz.q_dichotomy([0, 1e-9]) == "zero"
    assert cz.q_dichotomy([1, 2]) == "positive"
    assert cz.q_dichotomy([-1, -2]) == "negative"
    assert cz.q_dichotomy([-1, 2]) == "mixed"


def test_helicoid_v_equation():
    s = np.linspace(-3, 3, 601)
    poly = ch.vertical_component_poly(sf.helicoid(), 0.3).oriented()
    assert np.allclose(poly.as_tuple(), (-1, 0, -1), atol=1e-10)
    # hand check: (0 + (-1) s)/(-1 - s^2) = s/(1 + s^2)
    assert np.allclose(cz.u_from_poly(poly, s), helicoid_u(s), atol=1e-12)
    assert cz.p_polynomial_check(poly, cz.CurveProfile(s, helicoid_u(s))) <= 1e-4
    assert poly.discriminant == pytest.approx(-4.0, abs=1e-9)


def test_v_equation_rejects_root():
    s = np.linspace(-1, 1, 101)
    poly = ch.VerticalPoly(-0.1, 0.0, 1.0)
    with pytest.raises(PolynomialRoot):
        cz.p_polynomial_check(poly, cz.CurveProfile(s, 0 * s))


@pytest.mark.parametrize("eps", [-1.0, 0.0, 2.2])
def test_discriminant_identity(eps):
    d = cz.discriminant_check(sf.helicoid(), eps)
    assert d["discriminant"] == pytest.approx(-4.0, abs=1e-8)
    assert abs(d["discriminant"] - d["frame_value"]) <= 1e-6
    assert d["q_seed"] == pytest.approx(4.0, abs=1e-6)


def test_p_and_v_profiles():
    poly = ch.VerticalPoly(-1.0, 0.0, -1.0)
    s = np.linspace(-1, 1, 5)
    assert np.allclose(cz.p_profile(poly, s).values, -(1 + s * s))
    assert np.allclose(cz.v_profile(poly, s).values, np.sqrt(1 + s * s))


def test_d_along_paraboloid_characteristic():
    r = cz.d_equation_residual(sf.paraboloid(domain=((-2, 2), (-2, 2))), (1.0, 0.0), arc=(-0.3, 0.3))
    assert r.residual <= 1e-3
    x = r.curve.params[:, 0]
    assert np.allclose(r.d_profile.values, 2 * np.abs(x), atol=1e-10)


def test_d_equation_horizontal_plane():
    flat = sf.chart_from_spec({"kind": "t_graph", "formula": "0.3", "domain": [[-1, 1], [-1, 1]]})
    r = cz.d_equation_residual(flat, (0.5, 0.2), arc=(-0.2, 0.2))
    assert r.residual <= 1e-3
    p = r.curve.params
    assert np.allclose(r.d_profile.values, np.hypot(p[:, 0], p[:, 1]), atol=1e-10)


def test_d_equation_fails_on_non_stationary_graph():
    chart = sf.chart_from_spec({"kind": "t_graph", "formula": "x**2 + y**3", "domain": [[-1, 1], [-1, 1]]})
    assert cz.d_equation_residual(chart, (0.5, 0.4), arc=(-0.1, 0.1)).residual > 1e-2


def test_d_cross_check():
    _, _, P = sf.param_grid(((0.2, 1), (-1, 1)), (9, 9))
    assert cz.d_cross_check(sf.paraboloid(), P) <= 1e-8
    assert cz.d_cross_check(sf.u_lambda(1.5), P) <= 1e-8
