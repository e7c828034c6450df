"""Scalar profiles along characteristic lines of area-stationary surfaces.

Along a characteristic straight line the function u = <N,T>/|N_h| solves
u'' + 6 u' u + 4 u^3 = 0, whose solutions are the rational functions

    u_{a,b}(s) = (a + (2a^2 + b) s) / (1 + 2 a s + (2a^2 + b) s^2)

with u(0) = a, u'(0) = b.  This module evaluates them, fits them, checks the related
quadratic p(s) and the ODE for v = |p|^(1/2), and the equation D D'' = 2 (D'-1)(D'-2)
for the area factor D of a t-graph.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .characteristic import (
    FD_STENCIL_STEP,
    CharacteristicCurve,
    VerticalPoly,
    deformation_vectors,
    ruling_frame,
    trace_characteristic,
    vertical_component_poly,
)
from .errors import HeisenbergError, NotACodazziProfile, PoleAt, PolynomialRoot, SingularPoint
from .surface import SINGULAR_TOL, RuledChart, SurfaceChart, TGraph, frame_field

POLE_TOL = 1e-12
ZERO_Q_TOL = 1e-8
PROFILE_LABELS = ("u", "q", "D", "p", "v")


@dataclass(frozen=True)
class CodazziCoeffs:
    a: float
    b: float
    deviation: Optional[float] = None

    @property
    def invariant(self) -> float:
        """a^2 + b; the sign decides whether the solution is defined on the whole line."""
        return self.a * self.a + self.b

    @property
    def globally_defined(self) -> bool:
        return self.invariant > 0 or (self.a == 0 and self.b == 0)

    def denominator(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 + 2.0 * self.a * s + (2.0 * self.a ** 2 + self.b) * s * s

    def poles(self) -> np.ndarray:
        """Real zeros of the denominator, sorted."""
        m = self.invariant
        if m > 0 or (self.a == 0 and self.b == 0):
            return np.array([])
        r = math.sqrt(-m)
        # roots 1/(-a -+ sqrt(-m)), stable when the leading coefficient is tiny
        roots = [1.0 / d for d in (-self.a - r, -self.a + r) if d != 0.0]
        return np.unique(np.array(roots))


@dataclass
class CurveProfile:
    s_values: np.ndarray
    values: np.ndarray
    label: str = "u"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s_values = np.asarray(self.s_values, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.s_values.shape != self.values.shape or self.s_values.ndim != 1:
            raise HeisenbergError("profile needs equal-length 1-d samples")
        if self.label not in PROFILE_LABELS:
            raise HeisenbergError(f"unknown profile label {self.label!r}")
        if len(self.s_values) >= 2:
            d = np.diff(self.s_values)
            if np.any(d <= 0) or np.max(np.abs(d - d[0])) > 1e-9 * max(1.0, abs(d[0])):
                raise HeisenbergError("profile samples must be uniformly spaced and increasing")

    @property
    def step(self) -> float:
        return float(self.s_values[1] - self.s_values[0])

    def __len__(self):
        return len(self.s_values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "value", "label"])
            for s, v in zip(self.s_values, self.values):
                w.writerow([f"{s:.9g}", f"{v:.9g}", self.label])

    @classmethod
    def from_csv(cls, path) -> "CurveProfile":
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        return cls([float(r["s"]) for r in rows], [float(r["value"]) for r in rows], rows[0]["label"])


def _check_pole(coeffs: CodazziCoeffs, s):
    den = coeffs.denominator(s)
    bad = np.abs(den) < POLE_TOL
    if np.any(bad):
        raise PoleAt(float(np.asarray(s, dtype=float)[bad].flat[0]) if np.ndim(s) else float(s))
    return den


def codazzi_solution(coeffs: CodazziCoeffs, s):
    den = _check_pole(coeffs, s)
    s = np.asarray(s, dtype=float)
    val = (coeffs.a + (2.0 * coeffs.a ** 2 + coeffs.b) * s) / den
    return float(val) if val.ndim == 0 else val


def q_along_line(coeffs: CodazziCoeffs, s):
    """q = 4 (u' + u^2) = 4 (a^2 + b) / denominator^2."""
    den = _check_pole(coeffs, s)
    val = 4.0 * coeffs.invariant / den ** 2
    return float(val) if np.ndim(val) == 0 else val


def solution_profile(coeffs: CodazziCoeffs, s_range=(-3.0, 3.0), n: int = 601) -> CurveProfile:
    s = np.linspace(*s_range, n)
    return CurveProfile(s, codazzi_solution(coeffs, s), "u")


def _central(values: np.ndarray, h: float):
    """Fourth-order central first and second differences at samples 2 .. n-3."""
    f = values
    d1 = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d2 = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / (12.0 * h * h)
    return d1, d2


def codazzi_residual(profile: CurveProfile) -> float:
    """max |u'' + 6 u' u + 4 u^3| at interior samples."""
    if len(profile) < 5:
        raise HeisenbergError("need at least 5 samples")
    u = profile.values
    d1, d2 = _central(u, profile.step)
    um = u[2:-2]
    return float(np.max(np.abs(d2 + 6.0 * d1 * um + 4.0 * um ** 3)))


def fit_codazzi_coeffs(profile: CurveProfile, tol: float = 1e-3) -> CodazziCoeffs:
    """(a, b) = (u(0), u'(0)) from the samples, polished by least squares on the closed form."""
    if len(profile) < 3:
        raise HeisenbergError("need at least 3 samples")
    s, u, h = profile.s_values, profile.values, profile.step
    i0 = int(np.argmin(np.abs(s)))
    if abs(s[i0]) > 1e-9 * max(1.0, h):
        raise HeisenbergError("profile must contain s = 0")
    a = u[i0]
    if 2 <= i0 <= len(s) - 3:
        b = (u[i0 - 2] - 8 * u[i0 - 1] + 8 * u[i0 + 1] - u[i0 + 2]) / (12 * h)
    elif 1 <= i0 <= len(s) - 2:
        b = (u[i0 + 1] - u[i0 - 1]) / (2 * h)
    else:
        raise HeisenbergError("s = 0 must be an interior sample")

    def resid(ab):
        den = 1.0 + 2.0 * ab[0] * s + (2.0 * ab[0] ** 2 + ab[1]) * s * s
        return (ab[0] + (2.0 * ab[0] ** 2 + ab[1]) * s) / den - u

    def deviation(ab):
        r = resid(ab)
        return float(np.max(np.abs(r))) if np.all(np.isfinite(r)) else np.inf

    best = np.array([a, b])
    dev = deviation(best)
    if len(s) >= 3 and np.isfinite(dev):
        try:
            sol = least_squares(resid, best, xtol=1e-15, ftol=1e-15, gtol=1e-15)
            if deviation(sol.x) < dev:
                best, dev = sol.x, deviation(sol.x)
        except (ValueError, FloatingPointError):
            pass
    if dev > tol:
        raise NotACodazziProfile(f"profile deviates from u_(a,b) by {dev:.3g}")
    return CodazziCoeffs(float(best[0]), float(best[1]), dev)


# ---------------------------------------------------------------------------
# profiles from surfaces

def ruling_profile(chart: RuledChart, eps: float, s_values) -> CurveProfile:
    """u along the ruling through Gamma(eps), in the orientation where Z = +dF/ds."""
    s_values = np.asarray(s_values, dtype=float)
    ff = ruling_frame(chart, np.full_like(s_values, eps), s_values)
    return CurveProfile(s_values, ff.u, "u", {"eps": eps})


def curve_profile(chart: SurfaceChart, curve: CharacteristicCurve) -> CurveProfile:
    """u along a traced unit-speed characteristic, in the orientation of its tangent."""
    ff = frame_field(chart, curve.params)
    sign = np.sign(np.sum(ff.z[1:-1] * _tangents(curve), axis=-1))
    sign = np.concatenate([[sign[0]], sign, [sign[-1]]])
    return CurveProfile(curve.s, sign * ff.u, "u")


def _tangents(curve: CharacteristicCurve) -> np.ndarray:
    from .core import frame_tangents

    return frame_tangents(curve.points, curve.arc_step)


def q_profile(profile: CurveProfile) -> CurveProfile:
    """q = 4 (u' + u^2) from a u-profile by central differences (interior samples)."""
    d1, _ = _central(profile.values, profile.step)
    return CurveProfile(profile.s_values[2:-2], 4.0 * (d1 + profile.values[2:-2] ** 2), "q")


def q_dichotomy(q_values, tol: float = ZERO_Q_TOL) -> str:
    """'zero', 'positive', 'negative' or 'mixed' for samples of q on one line."""
    q = np.asarray(q_values, dtype=float)
    if np.max(np.abs(q)) <= tol:
        return "zero"
    if np.min(q) > 0:
        return "positive"
    if np.max(q) < 0:
        return "negative"
    return "mixed"


# ---------------------------------------------------------------------------
# the quadratic p and the v equation

def p_profile(poly: VerticalPoly, s_values) -> CurveProfile:
    s = np.asarray(s_values, dtype=float)
    return CurveProfile(s, poly(s), "p")


def v_profile(poly: VerticalPoly, s_values) -> CurveProfile:
    s = np.asarray(s_values, dtype=float)
    return CurveProfile(s, np.sqrt(np.abs(poly(s))), "v")


def u_from_poly(poly: VerticalPoly, s):
    s = np.asarray(s, dtype=float)
    return (0.5 * poly.b + poly.c * s) / poly(s)


def v_equation_residuals(poly: VerticalPoly, profile: CurveProfile) -> np.ndarray:
    """LHS - RHS of the v equation at interior samples, q taken from the u-profile."""
    s, h, u = profile.s_values, profile.step, profile.values
    p = poly(s)
    if np.any(np.abs(p) < 1e-12) or np.any(np.sign(p) != np.sign(p[0])):
        raise PolynomialRoot("p has a root on the sampled range; q vanishes along this line")
    v = np.sqrt(np.abs(p))
    inv1, inv2 = 1.0 / v, 1.0 / v ** 2
    d_inv1, _ = _central(inv1, h)
    d_inv2, dd_inv2 = _central(inv2, h)
    q = q_profile(profile).values
    um, vm = u[2:-2], v[2:-2]
    return d_inv1 ** 2 - 0.5 * dd_inv2 - um * d_inv2 - q / (4.0 * vm ** 2)


def p_polynomial_check(poly: VerticalPoly, profile: CurveProfile) -> float:
    """max of the v-equation residual and of |u - (b/2 + c s)/p(s)| along the profile."""
    res_v = float(np.max(np.abs(v_equation_residuals(poly, profile))))
    res_u = float(np.max(np.abs(profile.values - u_from_poly(poly, profile.s_values))))
    return max(res_v, res_u)


def discriminant_check(chart: RuledChart, eps: float, h: float = FD_STENCIL_STEP) -> dict:
    """b^2 - 4ac from the fitted poly against -4 |N_h|^2 (Z(u) + u^2) at Gamma(eps).

    The fitted coefficients are divided by the seed speed |Gamma'(eps)| so that a
    seed moving at unit speed along S is the reference.
    """
    poly = vertical_component_poly(chart, eps)
    L = float(np.linalg.norm(deformation_vectors(chart, eps, 0.0)))
    disc = poly.discriminant / L ** 2
    s = np.array([-2 * h, -h, 0.0, h, 2 * h])
    ff = ruling_frame(chart, np.full(5, float(eps)), s)
    u = ff.u
    zu = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
    nh = float(ff.nh[2])
    frame_value = -4.0 * nh ** 2 * (zu + u[2] ** 2)
    return {"poly": poly, "discriminant": disc, "frame_value": frame_value,
            "q_seed": 4.0 * (zu + u[2] ** 2), "nh_seed": nh, "seed_speed": L}


# ---------------------------------------------------------------------------
# the D equation on t-graphs

def d_formula(chart: TGraph, params) -> np.ndarray:
    """((u_x - y)^2 + (u_y + x)^2)^(1/2) from the height function."""
    p = np.asarray(params, dtype=float)
    _, ux, uy = chart.height_derivatives(p)
    x, y = p[..., 0], p[..., 1]
    return np.hypot(ux - y, uy + x)


def d_from_frame(chart: SurfaceChart, params) -> np.ndarray:
    ff = frame_field(chart, params)
    return ff.nh / np.abs(ff.nt)


def d_cross_check(chart: TGraph, params) -> float:
    return float(np.max(np.abs(d_formula(chart, params) - d_from_frame(chart, params))))


@dataclass
class DEquationResult:
    residual: float
    d_profile: CurveProfile
    curve: CharacteristicCurve
    truncated: bool


def d_equation_residual(chart: TGraph, start, arc=(-0.5, 0.5), step: float = 1e-2,
                        min_d: float = 1e-6) -> DEquationResult:
    """max |D D'' - 2 (D'-1)(D'-2)| along the characteristic through ``start``.

    Derivatives are taken along the characteristic of the upward normal (<N,T> > 0),
    the orientation in which D = |N_h|/<N,T>.
    """
    start = np.asarray(start, dtype=float)
    ff0 = frame_field(chart, start)
    sign = 1.0 if float(ff0.nt) > 0 else -1.0
    curve = trace_characteristic(chart, start, arc, step, singular_tol=max(SINGULAR_TOL, min_d), sign=sign)
    D = d_from_frame(chart, curve.params)
    if np.min(D) <= min_d:
        raise SingularPoint("characteristic reaches the singular set", start)
    prof = CurveProfile(curve.s, D, "D")
    if len(D) < 5:
        raise HeisenbergError("curve too short for second differences")
    d1, d2 = _central(D, curve.arc_step)
    res = D[2:-2] * d2 - 2.0 * (d1 - 1.0) * (d1 - 2.0)
    return DEquationResult(float(np.max(np.abs(res))), prof, curve, curve.truncated)
