"""Desk-scale acceptance suite.

Each check computes a measured residual and compares it with a fixed tolerance.  Every
check function returns a :class:`CheckResult`; :func:`run_suite` runs a selection and is
shared by the test-suite and by ``heisenberg verify``.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import characteristic as ch
from . import codazzi as cz
from . import surface as sf
from . import variation as vr

SEED = 20240611


@dataclass
class CheckResult:
    name: str
    anchor: str
    passed: bool
    measured: dict
    tolerance: dict
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        meas = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.measured.items())
        return f"[{tag}] {self.name} ({self.anchor}): {meas}"

    def as_dict(self):
        return asdict(self)


def _result(name, anchor, checks: dict, tolerance: dict, detail=""):
    """``checks`` maps a label to (measured, passed)."""
    measured = {k: (float(v) if isinstance(v, (float, np.floating, int, np.integer)) and not isinstance(v, bool)
                    else v) for k, (v, _) in checks.items()}
    return CheckResult(name, anchor, all(bool(ok) for _, ok in checks.values()), measured, tolerance, detail=detail)


def control_graph():
    """u(x,t) = t on [0,1]^2: a non-stationary intrinsic graph."""
    return sf.chart_from_spec({"kind": "intrinsic_graph", "formula": "t", "domain": [[0, 1], [0, 1]],
                               "name": "u=t"})


def injected_control():
    """u(x,t) = x + 0.1 x^2, declared stationary to exercise a failing check."""
    return sf.chart_from_spec({"kind": "intrinsic_graph", "formula": "x + 0.1*x**2",
                               "domain": [[-1, 1], [-1, 1]], "name": "u=x+0.1x^2"})


# ---------------------------------------------------------------------------

def check_codazzi_closed_form(n: int = 100, tol: float = 1e-4) -> CheckResult:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(n):
        # a in [-1,1], a^2 + b in [0.2, 3]: the complex poles stay >= 0.43 from the real axis
        a = rng.uniform(-1.0, 1.0)
        b = rng.uniform(0.2, 3.0) - a * a
        prof = cz.solution_profile(cz.CodazziCoeffs(a, b), (-5.0, 5.0), 1001)
        worst = max(worst, cz.codazzi_residual(prof))
    return _result("codazzi closed form", "rational solutions of the characteristic ODE",
                   {"max_residual": (worst, worst <= tol)}, {"max_residual": tol})


def check_helicoid_profile(tol: float = 1e-6) -> CheckResult:
    h = sf.helicoid()
    s = np.linspace(-3.0, 3.0, 601)
    dev, coef = 0.0, 0.0
    for eps in (-1.3, 0.0, 0.7, 2.1):
        prof = cz.ruling_profile(h, eps, s)
        dev = max(dev, float(np.max(np.abs(prof.values - s / (1 + s * s)))))
        c = cz.fit_codazzi_coeffs(prof)
        coef = max(coef, abs(c.a), abs(c.b - 1.0))
    return _result("helicoid profile", "u along rulings of the helicoid",
                   {"profile_dev": (dev, dev <= tol), "coeff_dev": (coef, coef <= tol)},
                   {"profile_dev": tol, "coeff_dev": tol})


def check_q_values(tol: float = 1e-4, plane_tol: float = 1e-10) -> CheckResult:
    h = sf.helicoid()
    eps = np.linspace(-2.0, 2.0, 9)
    q0 = vr.q_function(h, np.stack([eps, np.zeros_like(eps)], axis=-1))
    q1 = vr.q_function(h, np.stack([eps, np.ones_like(eps)], axis=-1))
    err = max(float(np.max(np.abs(q0 - 4.0))), float(np.max(np.abs(q1 - 1.0))))
    plane = 0.0
    for a in (0.0, 1.0, -0.5):
        _, _, P = sf.param_grid(((-0.9, 0.9), (-0.9, 0.9)), (15, 15))
        plane = max(plane, float(np.max(np.abs(vr.q_function(sf.vertical_plane(a), P)))))
    return _result("q values", "q = 4(Z(u) + u^2)",
                   {"helicoid_dev": (err, err <= tol), "plane_max": (plane, plane <= plane_tol)},
                   {"helicoid_dev": tol, "plane_max": plane_tol})


def check_foliation(stationary_extra: Sequence = (), tol_exact: float = 1e-6, tol_parab: float = 1e-4,
                    control_min: float = 1e-3) -> CheckResult:
    exact = 0.0
    exact_cases = [(sf.vertical_plane(0.0), (0.1, -0.2)), (sf.vertical_plane(1.0), (-0.3, 0.4)),
                   (sf.vertical_plane(-2.0), (0.0, 0.0))]
    exact_cases += [(sf.helicoid(), (e, s)) for e, s in ((0.0, 0.0), (0.8, 1.0), (-1.5, -0.5))]
    for chart, start in exact_cases:
        c = ch.trace_characteristic(chart, start, arc=(-0.6, 0.6))
        exact = max(exact, ch.straightness_residual(c))
    parab = 0.0
    for start in ((0.5, 0.0), (0.8, -0.6), (0.6, 0.7)):
        c = ch.trace_characteristic(sf.paraboloid(), start, arc=(-0.25, 0.25))
        parab = max(parab, ch.straightness_residual(c))
    ctrl = ch.straightness_residual(ch.trace_characteristic(control_graph(), (0.0, 0.2), arc=(0.0, 1.0)))
    checks = {"stationary_max": (exact, exact <= tol_exact), "paraboloid_max": (parab, parab <= tol_parab),
              "control": (ctrl, ctrl > control_min)}
    for chart in stationary_extra:
        (a1, b1), (a2, b2) = chart.domain
        start = (0.5 * (a1 + b1), 0.5 * (a2 + b2))
        r = ch.straightness_residual(ch.trace_characteristic(chart, start, arc=(-0.5, 0.5)))
        checks[f"declared:{chart.name}"] = (r, r <= tol_exact)
    return _result("foliation by straight lines", "characteristics of stationary surfaces are lines", checks,
                   {"stationary_max": tol_exact, "paraboloid_max": tol_parab, "control_min": control_min})


def check_area(tol: float = 1e-10) -> CheckResult:
    a = vr.area(sf.vertical_plane(1.0, domain=((0, 1), (0, 1))), grid=(201, 201))
    err = abs(a - math.sqrt(2.0))
    # u = x^2/2: integrand sqrt(1 + x^2), exact area (sqrt 2 + asinh 1)/2
    exact = 0.5 * (math.sqrt(2.0) + math.asinh(1.0))
    chart = sf.chart_from_spec({"kind": "intrinsic_graph", "formula": "x**2/2", "domain": [[0, 1], [0, 1]]})
    errs = [abs(vr.area(chart, grid=(n, n)) - exact) for n in (9, 17, 33)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(abs(r - 16.0) <= 3.0 for r in ratios)
    return _result("sub-Riemannian area", "area of intrinsic graphs",
                   {"sqrt2_err": (err, err <= tol), "ratio_coarse": (ratios[0], ok), "ratio_fine": (ratios[1], ok)},
                   {"sqrt2_err": tol, "ratio": "16 +- 3"})


def check_first_variation(n_bumps: int = 10, tol_fd: float = 1e-6, tol_agree: float = 1e-4,
                          tol_stationary: float = 1e-5) -> CheckResult:
    rng = np.random.default_rng(SEED + 6)
    ux = sf.vertical_plane(1.0, domain=((0, 1), (0, 1)))
    g = vr.SurfaceGrid(ux, grid=(201, 201))
    fd = 0.0
    for _ in range(n_bumps):
        phi = vr.random_bump(rng, ux.domain)
        fd = max(fd, abs(vr.first_variation_graph(ux, phi, grid=g) - vr.first_variation_graph_fd(ux, phi, grid=g)))
    # three evaluators on the non-stationary control u = t
    ctrl = control_graph()
    gc = vr.SurfaceGrid(ctrl, grid=(201, 201))
    phi = vr.bump((0.5, 0.5), (0.3, 0.3), power=8)
    U = vr.GraphBumpField(phi)
    vals = [vr.first_variation_graph(ctrl, phi, grid=gc), vr.first_variation_general(ctrl, U, grid=gc),
            vr.first_variation_H(ctrl, U, grid=gc)]
    Un = vr.SurfaceFunctionField(phi, "nu_h")
    vals_n = [vr.first_variation_general(ctrl, Un, grid=gc), vr.first_variation_H(ctrl, Un, grid=gc)]
    agree = max(max(vals) - min(vals), max(vals_n) - min(vals_n))
    # stationary charts
    stat = 0.0
    for chart in (sf.helicoid_intrinsic(domain=((-0.8, 0.8), (-0.8, 0.8))), sf.vertical_plane(0.5)):
        stat = max(stat, abs(vr.first_variation_graph(chart, vr.random_bump(rng, chart.domain))))
    hel = sf.helicoid()
    reg = ((-1.0, 1.0), (-1.5, 1.5))
    gh = vr.SurfaceGrid(hel, reg, grid=(201, 201))
    for comps in ((1.0, 0.0, 0.0), (0.3, -0.7, 0.5)):
        amb = vr.ConstantFrameField(lambda p: np.where(np.sum(p ** 2, axis=-1) < 1.0,
                                                       (1.0 - np.sum(p ** 2, axis=-1)) ** 8, 0.0), comps)
        stat = max(stat, abs(vr.first_variation_general(hel, amb, grid=gh)))
    checks = {"graph_vs_fd": (fd, fd <= tol_fd), "three_formula_spread": (agree, agree <= tol_agree),
              "stationary_max": (stat, stat <= tol_stationary), "control_value": (vals[0], abs(vals[0]) > 1e-3)}
    return _result("first variation", "first variation formulas", checks,
                   {"graph_vs_fd": tol_fd, "three_formula_spread": tol_agree, "stationary_max": tol_stationary})


def check_flux(tol: float = 1e-4) -> CheckResult:
    cases = [("vertical_plane", sf.vertical_plane(0.0), ((-0.8, 0.8), (-0.8, 0.8))),
             ("helicoid", sf.helicoid(), ((-1.0, 1.2), (-2.0, 1.5))),
             ("paraboloid", sf.paraboloid(), ((0.25, 0.95), (-0.6, 0.8)))]
    worst = 0.0
    for _, chart, reg in cases:
        for U in vr.KILLING_GENERATORS.values():
            r = vr.flux(chart, vr.rectangle(reg), U)
            worst = max(worst, abs(r["value"]) / r["perimeter"])
    return _result("Killing flux", "boundary flux of Killing fields", {"max_flux_per_length": (worst, worst <= tol)},
                   {"max_flux_per_length": tol})


def check_jacobian(tol_rel: float = 1e-6, tol_fit: float = 1e-8, tol_coef: float = 1e-6) -> CheckResult:
    h = sf.helicoid()
    E, S = np.meshgrid(np.linspace(-3.0, 3.0, 21), np.linspace(-3.0, 3.0, 21), indexing="ij")
    rel = float(np.max(ch.jacobian_identity_error(h, E, S)))
    fit, coef = 0.0, 0.0
    for eps in np.linspace(-2.5, 2.5, 6):
        poly = ch.vertical_component_poly(h, eps)
        exp = ch.expected_vertical_poly(h, eps)
        fit = max(fit, poly.residual)
        coef = max(coef, *(abs(abs(p) - abs(e)) for p, e in zip(poly.as_tuple(), exp.as_tuple())))
    return _result("parameterization Jacobian", "ruled parameterization by seed and rulings",
                   {"jacobian_rel": (rel, rel <= tol_rel), "fit_residual": (fit, fit <= tol_fit),
                    "coeff_dev": (coef, coef <= tol_coef)},
                   {"jacobian_rel": tol_rel, "fit_residual": tol_fit, "coeff_dev": tol_coef})


def check_v_equation(tol_v: float = 1e-3, tol_disc: float = 1e-8, tol_frame: float = 1e-6) -> CheckResult:
    h = sf.helicoid()
    s = np.linspace(-3.0, 3.0, 601)
    vres, dd, df = 0.0, 0.0, 0.0
    for eps in (-1.0, 0.0, 0.9):
        poly = ch.vertical_component_poly(h, eps).oriented()
        vres = max(vres, cz.p_polynomial_check(poly, cz.ruling_profile(h, eps, s)))
        d = cz.discriminant_check(h, eps)
        dd = max(dd, abs(d["discriminant"] + 4.0))
        df = max(df, abs(d["discriminant"] - d["frame_value"]))
    return _result("v equation", "quadratic p and v = |p|^(1/2)",
                   {"v_residual": (vres, vres <= tol_v), "disc_dev": (dd, dd <= tol_disc),
                    "disc_vs_frame": (df, df <= tol_frame)},
                   {"v_residual": tol_v, "disc_dev": tol_disc, "disc_vs_frame": tol_frame})


def check_d_equation(tol: float = 1e-3, tol_cross: float = 1e-8) -> CheckResult:
    p = sf.paraboloid()
    res = 0.0
    for start in ((0.6, 0.0), (0.7, -0.5), (0.5, 0.8)):
        res = max(res, cz.d_equation_residual(p, start, arc=(-0.25, 0.25), step=1e-2).residual)
    _, _, P = sf.param_grid(((0.2, 1.0), (-1.0, 1.0)), (17, 17))
    cross = cz.d_cross_check(p, P)
    return _result("D equation", "area factor of t-graphs",
                   {"d_residual": (res, res <= tol), "d_cross_check": (cross, cross <= tol_cross)},
                   {"d_residual": tol, "d_cross_check": tol_cross})


def check_stability(n_bumps: int = 100, tol_plane: float = 1e-10, k_max: int = 64) -> CheckResult:
    rng = np.random.default_rng(SEED + 11)
    plane = sf.vertical_plane(0.0)
    reg = ((-0.8, 0.8), (-0.8, 0.8))
    g = vr.SurfaceGrid(plane, reg, grid=(101, 101))
    qmin = min(vr.stability_form(plane, vr.random_bump(rng, reg), grid=g).Q_value for _ in range(n_bumps))
    res = vr.instability_search(sf.helicoid(), k_max=k_max)
    ratios = list(res.gradient_ratios.values())
    ratio_dev = max(abs(r - 0.5) / 0.5 for r in ratios)
    first = res.first_negative_k
    return _result("stability", "index form sign",
                   {"plane_min_Q": (qmin, qmin >= -tol_plane),
                    "first_negative_k": (first if first is not None else -1, first is not None and first <= k_max),
                    "gradient_ratio_dev": (ratio_dev, ratio_dev <= 0.2)},
                   {"plane_min_Q": -tol_plane, "k_max": k_max, "gradient_ratio_dev": 0.2})


def check_divergence(n_pairs: int = 20, tol: float = 1e-4) -> CheckResult:
    rng = np.random.default_rng(SEED + 12)
    worst = {}
    for name, chart, reg in (("plane", sf.vertical_plane(0.0), ((-0.8, 0.8), (-0.8, 0.8))),
                             ("helicoid", sf.helicoid(), ((-1.0, 1.0), (-2.0, 2.0)))):
        g = vr.SurfaceGrid(chart, reg, grid=(201, 201))
        worst[name] = max(vr.divergence_identity_residual(chart, vr.random_bump(rng, reg), vr.random_bump(rng, reg),
                                                          grid=g) for _ in range(n_pairs))
    return _result("divergence identity", "integration by parts along characteristics",
                   {k: (v, v <= tol) for k, v in worst.items()}, {"residual": tol})


CHECKS: dict[int, Callable[..., CheckResult]] = {
    1: check_codazzi_closed_form,
    2: check_helicoid_profile,
    3: check_q_values,
    4: check_foliation,
    5: check_area,
    6: check_first_variation,
    7: check_flux,
    8: check_jacobian,
    9: check_v_equation,
    10: check_d_equation,
    11: check_stability,
    12: check_divergence,
}


def run_check(number: int, **kw) -> CheckResult:
    t0 = time.perf_counter()
    res = CHECKS[number](**kw)
    res.seconds = time.perf_counter() - t0
    res.name = f"{number:02d} {res.name}"
    return res


def run_suite(selection: Optional[Sequence[int]] = None, inject_control: bool = False,
              echo: Optional[Callable[[str], None]] = None) -> list:
    numbers = sorted(CHECKS) if selection is None else list(selection)
    out = []
    for n in numbers:
        kw = {"stationary_extra": [injected_control()]} if (inject_control and n == 4) else {}
        r = run_check(n, **kw)
        out.append(r)
        if echo:
            echo(r.line())
    return out
