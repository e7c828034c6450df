"""Characteristic curves, seed curves and ruled parameterizations.

Integral curves are computed in parameter space with fixed-step RK4 and lifted through
the chart.  For intrinsic graphs the characteristic field is W = d/dx + 2u d/dt (so the
curve parameter is x); on every other chart it is the pull-back of the unit field Z.

The ruled parameterization F(eps, s) = Gamma(eps) + s Z_Gamma(eps) is a
:class:`~heisenberg_surfaces.surface.RuledChart`; this module adds its deformation vector
V_eps(s) = dF/deps, the quadratic law for <V_eps, T> and the Jacobian identity.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import FrameVector, Point, dot_array, horizontality_residual
from .errors import (
    DomainError,
    EmptyCurve,
    HeisenbergError,
    IdentityViolation,
    NotQuadratic,
    SingularPoint,
)
from .surface import (
    SINGULAR_TOL,
    IntrinsicGraph,
    RuledChart,
    SurfaceChart,
    frame_field,
    pullback,
)

FD_STENCIL_STEP = 1e-3


# ---------------------------------------------------------------------------
# parameter-space vector fields

def z_velocity(chart: SurfaceChart, params, sign: float = 1.0) -> np.ndarray:
    """Parameter velocity of the unit characteristic field (times ``sign``)."""
    ff = frame_field(chart, params)
    return sign * pullback(ff, ff.z)


def s_velocity(chart: SurfaceChart, params) -> np.ndarray:
    ff = frame_field(chart, params)
    return pullback(ff, ff.s)


def w_velocity(chart: IntrinsicGraph, params) -> np.ndarray:
    """W = d/dx + 2u d/dt on an intrinsic graph."""
    u = chart.graph_values(params)[0]
    return np.stack([np.ones_like(u), 2.0 * u], axis=-1)


def rk4_step(field: Callable, p: np.ndarray, h: float) -> np.ndarray:
    k1 = field(p)
    k2 = field(p + 0.5 * h * k1)
    k3 = field(p + 0.5 * h * k2)
    k4 = field(p + h * k3)
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class ZStencil:
    """Points at -2h, -h, 0, h, 2h along the characteristic through each parameter.

    Used for fourth-order derivatives in the Z direction: ``d1`` gives Z(g), ``d2`` gives
    Z(Z(g)) for any function ``g`` of the parameters evaluated on :attr:`params`.
    """

    params: np.ndarray  # shape (5, ...) + (2,)
    h: float

    @classmethod
    def build(cls, chart: SurfaceChart, params, h: float = FD_STENCIL_STEP) -> "ZStencil":
        params = np.asarray(params, dtype=float)
        field_ = lambda p: z_velocity(chart, p)
        p1 = rk4_step(field_, params, h)
        p2 = rk4_step(field_, p1, h)
        m1 = rk4_step(field_, params, -h)
        m2 = rk4_step(field_, m1, -h)
        return cls(np.stack([m2, m1, params, p1, p2]), h)

    def d1(self, g: np.ndarray) -> np.ndarray:
        return (g[0] - 8.0 * g[1] + 8.0 * g[3] - g[4]) / (12.0 * self.h)

    def d2(self, g: np.ndarray) -> np.ndarray:
        return (-g[0] + 16.0 * g[1] - 30.0 * g[2] + 16.0 * g[3] - g[4]) / (12.0 * self.h ** 2)


def z_derivative(chart: SurfaceChart, g: Callable, params, h: float = FD_STENCIL_STEP):
    """Z(g) at ``params`` for a function ``g`` of chart parameters."""
    st = ZStencil.build(chart, params, h)
    return st.d1(g(st.params))


# ---------------------------------------------------------------------------
# curves

@dataclass
class CharacteristicCurve:
    params: np.ndarray
    points: np.ndarray
    s: np.ndarray
    arc_step: float
    truncated: bool = False
    label: str = "characteristic"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.s)

    @property
    def arclength(self) -> np.ndarray:
        """Cumulative Riemannian length from the start parameter (signed)."""
        from .core import frame_tangents

        if len(self.points) < 3:
            return self.s.copy()
        tang = np.empty_like(self.points)
        tang[1:-1] = frame_tangents(self.points, self.arc_step)
        tang[0], tang[-1] = tang[1], tang[-2]
        speed = np.linalg.norm(tang, axis=-1)
        seg = 0.5 * (speed[1:] + speed[:-1]) * np.diff(self.s)
        out = np.concatenate([[0.0], np.cumsum(seg)])
        i0 = int(np.argmin(np.abs(self.s)))
        return out - out[i0]

    def horizontality(self) -> float:
        return horizontality_residual(self.points, self.arc_step)


def _integrate(field: Callable, start, smin: float, smax: float, step: float,
               ok: Callable) -> tuple[np.ndarray, np.ndarray, bool]:
    start = np.asarray(start, dtype=float).reshape(2)
    if smin > smax or step <= 0:
        raise ValueError("need smin <= smax and step > 0")
    truncated = False
    branches = {}
    for sign, end in ((1.0, smax), (-1.0, smin)):
        pts = [start]
        n = int(round(max(0.0, sign * end) / step))
        for _ in range(n):
            try:
                nxt = rk4_step(field, pts[-1], sign * step)
            except (SingularPoint, HeisenbergError):
                truncated = True
                break
            if not np.all(np.isfinite(nxt)) or not ok(nxt):
                truncated = True
                break
            pts.append(nxt)
        branches[sign] = np.array(pts)
    fwd, bwd = branches[1.0], branches[-1.0]
    params = np.concatenate([bwd[::-1], fwd[1:]])
    s = np.concatenate([-step * np.arange(len(bwd))[::-1], step * np.arange(1, len(fwd))])
    keep = (s >= smin - 1e-12) & (s <= smax + 1e-12)
    return params[keep], s[keep], truncated


def _regular_inside(chart: SurfaceChart, singular_tol: float):
    def ok(p):
        if not bool(chart.contains(p)):
            return False
        return bool(frame_field(chart, p).nh > singular_tol)

    return ok


def trace_characteristic(chart: SurfaceChart, start, arc=(0.0, 1.0), step: Optional[float] = None,
                         singular_tol: float = SINGULAR_TOL, sign: float = 1.0) -> CharacteristicCurve:
    """Characteristic curve through ``start`` (chart parameters).

    Intrinsic graphs integrate x' = 1, t' = 2u (curve parameter = x - x0); other charts
    integrate the unit field Z (curve parameter = arc length).  ``sign=-1`` reverses the
    orientation.  When the curve leaves the domain it is cut and ``truncated`` is set.
    """
    smin, smax = arc
    if step is None:
        step = (smax - smin) / 1000.0
    start = np.asarray(start, dtype=float).reshape(2)
    if not bool(chart.contains(start)):
        raise DomainError(f"start {start} outside {chart.domain}")
    if isinstance(chart, IntrinsicGraph):
        field_ = lambda p: sign * w_velocity(chart, p)
        label = "characteristic_w"
    else:
        field_ = lambda p: z_velocity(chart, p, sign)
        label = "characteristic"
    params, s, truncated = _integrate(field_, start, smin, smax, step, _regular_inside(chart, singular_tol))
    if len(s) < 2:
        raise EmptyCurve(f"no step possible from {start} on {chart.name}")
    return CharacteristicCurve(params, chart.point(params), s, step, truncated, label)


def seed_curve(chart: SurfaceChart, start, arc=(0.0, 1.0), step: Optional[float] = None,
               singular_tol: float = SINGULAR_TOL) -> CharacteristicCurve:
    """RK4 integral curve of S through ``start``; one representative of the seed curves."""
    smin, smax = arc
    if step is None:
        step = (smax - smin) / 1000.0
    start = np.asarray(start, dtype=float).reshape(2)
    if frame_field(chart, start).nh <= singular_tol:
        raise SingularPoint(f"seed start {start} is singular", start)
    field_ = lambda p: s_velocity(chart, p)
    params, s, truncated = _integrate(field_, start, smin, smax, step, _regular_inside(chart, singular_tol))
    if len(s) < 2:
        raise EmptyCurve(f"no step possible from {start} on {chart.name}")
    return CharacteristicCurve(params, chart.point(params), s, step, truncated, "seed")


def straightness_residual(curve) -> float:
    """Largest distance from a sample to the total-least-squares line of all samples."""
    pts = curve.points if isinstance(curve, CharacteristicCurve) else np.asarray(curve, dtype=float)
    pts = pts.reshape(-1, 3)
    if len(pts) < 3:
        raise HeisenbergError("need at least 3 samples")
    centered = pts - pts.mean(axis=0)
    if np.max(np.abs(centered)) == 0.0:
        raise HeisenbergError("degenerate curve: all samples coincide")
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    d = vt[0]
    perp = centered - np.outer(centered @ d, d)
    return float(np.max(np.linalg.norm(perp, axis=1)))


def write_curves_csv(path, curves, eps_values=None):
    """Long-format CSV: curve_id, eps, s, x, y, t, horizontality, straightness."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve_id", "eps", "s", "x", "y", "t", "horizontality_residual", "straightness_residual"])
        for k, c in enumerate(curves):
            eps = np.nan if eps_values is None else eps_values[k]
            hor = c.horizontality() if len(c) >= 3 else np.nan
            strt = straightness_residual(c) if len(c) >= 3 else np.nan
            for s, (x, y, t) in zip(c.s, c.points):
                w.writerow([k] + [f"{v:.9g}" for v in (eps, s, x, y, t, hor, strt)])


# ---------------------------------------------------------------------------
# ruled parameterization from samples

def ruled_from_seed(seed, directions, eps=None, s_range=(-1.0, 1.0), interpolation: str = "linear",
                    tol: float = 1e-10) -> RuledChart:
    """Ruled chart through sampled seed points with sampled horizontal unit directions.

    ``seed`` is an (n, 3) coordinate array, a list of :class:`Point` or a
    :class:`CharacteristicCurve` (whose curve parameter becomes eps).  ``directions`` are
    frame components (A, B) or (A, B, C) with C = 0, or :class:`FrameVector` objects.
    Positions are interpolated coordinate-wise, directions through their angle.
    """
    if isinstance(seed, CharacteristicCurve):
        if eps is None:
            eps = seed.s
        seed = seed.points
    pts = np.array([p.as_array() if isinstance(p, Point) else p for p in seed], dtype=float).reshape(-1, 3)
    dirs = np.array([d.components if isinstance(d, FrameVector) else d for d in directions], dtype=float)
    if len(pts) < 2:
        raise HeisenbergError("ruled chart needs at least two seed samples")
    if len(dirs) != len(pts):
        raise HeisenbergError("seed and directions must have equal length")
    if dirs.shape[1] == 3:
        if np.max(np.abs(dirs[:, 2])) > tol:
            raise HeisenbergError("directions must be horizontal (zero T-component)")
        dirs = dirs[:, :2]
    if np.max(np.abs(np.hypot(dirs[:, 0], dirs[:, 1]) - 1.0)) > tol:
        raise HeisenbergError("directions must be unit vectors")
    eps = np.arange(len(pts), dtype=float) if eps is None else np.asarray(eps, dtype=float)
    if np.any(np.diff(eps) <= 0):
        raise HeisenbergError("eps samples must be increasing")
    theta = np.unwrap(np.arctan2(dirs[:, 1], dirs[:, 0]))

    if interpolation == "linear":
        def seed_fn(e):
            e = np.asarray(e, dtype=float)
            return np.stack([np.interp(e, eps, pts[:, k]) for k in range(3)], axis=-1)

        def dir_fn(e):
            th = np.interp(np.asarray(e, dtype=float), eps, theta)
            return np.stack([np.cos(th), np.sin(th)], axis=-1)

        seed_prime = dir_prime = None
        fd = 1e-6 * (eps[-1] - eps[0])
    elif interpolation == "cubic":
        from scipy.interpolate import CubicSpline

        sp = CubicSpline(eps, pts, axis=0)
        th = CubicSpline(eps, theta)
        dth = th.derivative()
        seed_fn, seed_prime = sp, sp.derivative()
        dir_fn = lambda e: np.stack([np.cos(th(e)), np.sin(th(e))], axis=-1)
        dir_prime = lambda e: dth(e)[..., None] * np.stack([-np.sin(th(e)), np.cos(th(e))], axis=-1)
        fd = None
    else:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    chart = RuledChart(seed_fn, dir_fn, seed_prime, dir_prime,
                       domain=((eps[0], eps[-1]), tuple(s_range)), fd_step=fd, name="ruled_from_seed")
    chart.eps_samples = eps
    return chart


# ---------------------------------------------------------------------------
# deformation vector and the quadratic law

def deformation_vectors(chart: RuledChart, eps, s) -> np.ndarray:
    """Frame components of V_eps(s) = dF/deps from the seed data (closed form)."""
    eps, s = np.broadcast_arrays(np.asarray(eps, dtype=float), np.asarray(s, dtype=float))
    g, gp, d, dp = chart.seed_data(eps)
    x, y = g[..., 0], g[..., 1]
    xp, yp, tp = gp[..., 0], gp[..., 1], gp[..., 2]
    a, b = d[..., 0], d[..., 1]
    ap, bp = dp[..., 0], dp[..., 1]
    vert = (tp - xp * y + x * yp) + 2.0 * (a * yp - b * xp) * s + (a * bp - ap * b) * s ** 2
    return np.stack([xp + s * ap, yp + s * bp, vert], axis=-1)


def _boundary_warning(chart: RuledChart, eps):
    lo, hi = chart.domain[0]
    h = chart.fd_step[0]
    e = np.asarray(eps, dtype=float)
    samples = getattr(chart, "eps_samples", None)
    if np.any(e - h < lo) or np.any(e + h > hi):
        warnings.warn("eps at the sampling boundary: seed derivatives are one-sided", RuntimeWarning)
    elif samples is not None and (np.any(np.isclose(e, samples[0])) or np.any(np.isclose(e, samples[-1]))):
        warnings.warn("eps at the sampling boundary: seed derivatives are one-sided", RuntimeWarning)


def deformation_vector(chart: RuledChart, eps: float, s: float) -> FrameVector:
    _boundary_warning(chart, eps)
    comps = deformation_vectors(chart, eps, s)
    base = Point.from_array(chart.point(np.array([eps, s], dtype=float)))
    return FrameVector.from_components(comps, base)


@dataclass(frozen=True)
class VerticalPoly:
    """<V_eps(s), T> = a + b s + c s^2."""

    a: float
    b: float
    c: float
    residual: float = 0.0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.a + self.b * s + self.c * s * s

    @property
    def discriminant(self) -> float:
        return self.b * self.b - 4.0 * self.a * self.c

    def oriented(self) -> "VerticalPoly":
        """Overall sign fixed so that a <= 0 (the convention a = -|N_h| at the seed)."""
        if self.a > 0 or (self.a == 0 and (self.c > 0 or (self.c == 0 and self.b > 0))):
            return VerticalPoly(-self.a, -self.b, -self.c, self.residual)
        return self

    def as_tuple(self):
        return (self.a, self.b, self.c)


def vertical_component_poly(chart: RuledChart, eps: float, s_samples=None,
                            tol: float = 1e-6) -> VerticalPoly:
    """Least-squares quadratic through s -> <V_eps(s), T>."""
    if s_samples is None:
        s_samples = np.linspace(*chart.domain[1], 9)
    s_samples = np.asarray(s_samples, dtype=float)
    if len(s_samples) < 7:
        raise ValueError("need at least 7 s-samples")
    _boundary_warning(chart, eps)
    vals = deformation_vectors(chart, np.full_like(s_samples, eps), s_samples)[:, 2]
    c, b, a = np.polyfit(s_samples, vals, 2)
    res = float(np.max(np.abs(np.polyval([c, b, a], s_samples) - vals)))
    if res > tol * max(1.0, float(np.max(np.abs(vals)))):
        raise NotQuadratic(f"quadratic fit residual {res:.3g} at eps={eps}")
    return VerticalPoly(float(a), float(b), float(c), res)


def cubic_coefficient(chart: RuledChart, eps: float, s_samples=None) -> float:
    """Leading coefficient of a cubic fit to <V_eps(s), T>; zero for ruled charts."""
    if s_samples is None:
        s_samples = np.linspace(*chart.domain[1], 11)
    vals = deformation_vectors(chart, np.full_like(s_samples, eps), s_samples)[:, 2]
    return float(np.polyfit(s_samples, vals, 3)[0])


def ruling_frame(chart: RuledChart, eps, s):
    """Frame field along rulings, re-oriented so that Z = +dF/ds."""
    eps, s = np.broadcast_arrays(np.asarray(eps, dtype=float), np.asarray(s, dtype=float))
    ff = frame_field(chart, np.stack([eps, s], axis=-1))
    flip = np.sign(dot_array(ff.z, ff.e2))
    flip = np.where(flip == 0, 1.0, flip)
    return ff._replace(normal=ff.normal * flip[..., None], nt=ff.nt * flip,
                       nu_h=ff.nu_h * flip[..., None], z=ff.z * flip[..., None])


def expected_vertical_poly(chart: RuledChart, eps: float, h: float = FD_STENCIL_STEP) -> VerticalPoly:
    """Coefficients predicted from the frame at Gamma(eps), for a seed moving along +S.

    With the seed speed |Gamma'| = L:  a = -L |N_h|,  b = -2 L <N,T>,
    c = -L |N_h| (Z(u) + 2 u^2),  u = <N,T>/|N_h|, all in the orientation with
    Z = +dF/ds.  A seed moving along -S flips all three signs.
    """
    s = np.array([-2 * h, -h, 0.0, h, 2 * h])
    ff = ruling_frame(chart, np.full(5, float(eps)), s)
    u = ff.u
    zu = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
    L = float(np.linalg.norm(deformation_vectors(chart, eps, 0.0)))
    nh, nt, u0 = float(ff.nh[2]), float(ff.nt[2]), float(u[2])
    return VerticalPoly(-L * nh, -2.0 * L * nt, -L * nh * (zu + 2.0 * u0 ** 2))


def foliation_jacobian(chart: RuledChart, eps: float, s: float, tol: float = 1e-6,
                       singular_tol: float = SINGULAR_TOL) -> float:
    """|V_eps(s)|, checked against |N_h|^-1 |<V_eps(s), T>|."""
    p = np.array([eps, s], dtype=float)
    ff = frame_field(chart, p)
    if ff.nh <= singular_tol:
        raise SingularPoint(f"singular point at (eps, s)=({eps}, {s})", p)
    V = deformation_vectors(chart, eps, s)
    jac = float(np.linalg.norm(V))
    other = abs(float(V[2])) / float(ff.nh)
    if abs(jac - other) > tol * max(1.0, jac):
        raise IdentityViolation(f"|V|={jac:.12g} but |<V,T>|/|N_h|={other:.12g} at ({eps}, {s})")
    return jac


def jacobian_identity_error(chart: RuledChart, eps, s) -> np.ndarray:
    """Relative error of |V| = |<V,T>|/|N_h|, vectorised."""
    eps, s = np.broadcast_arrays(np.asarray(eps, dtype=float), np.asarray(s, dtype=float))
    ff = frame_field(chart, np.stack([eps, s], axis=-1))
    V = deformation_vectors(chart, eps, s)
    jac = np.linalg.norm(V, axis=-1)
    return np.abs(jac - np.abs(V[..., 2]) / ff.nh) / jac
