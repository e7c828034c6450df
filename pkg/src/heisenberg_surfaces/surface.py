"""Surface charts in H^1 and the pointwise frame (N, nu_h, Z, S) they carry.

A chart maps a rectangle of parameters into H^1.  Three kinds are supported:

* ``t_graph``: (x, y) -> (x, y, u(x, y))
* ``intrinsic_graph``: (x, t) -> (x, u(x, t), t - x u(x, t)), a graph over the plane y = 0
* ``ruled``: (eps, s) -> Gamma(eps) + s Z_Gamma(eps), the horizontal line through the seed
  point Gamma(eps) with horizontal unit direction Z_Gamma(eps)

Charts only provide points and coordinate partial derivatives.  Everything metric is
computed in :func:`frame_field`, vectorised over arbitrary parameter arrays of shape
``(..., 2)``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np

from .core import (
    FrameVector,
    Point,
    cross_array,
    dot_array,
    horizontal_line_array,
    j_array,
    to_frame_array,
)
from .errors import DegenerateChart, DomainError, SingularPoint, SpecError

SINGULAR_TOL = 1e-8
FD_REL_STEP = 1e-5


def _broadcast(value, like):
    return np.broadcast_to(np.asarray(value, dtype=float), np.shape(like)).astype(float)


class SurfaceChart:
    """Base class; subclasses implement :meth:`point` and optionally analytic partials."""

    kind = "abstract"
    param_names = ("p1", "p2")
    # unit normal = orientation * normalize(d/dp1 x d/dp2)
    orientation = 1

    def __init__(self, domain, fd_step=None, name=None):
        (lo1, hi1), (lo2, hi2) = domain
        if not (hi1 > lo1 and hi2 > lo2):
            raise DomainError(f"empty domain {domain}")
        self.domain = ((float(lo1), float(hi1)), (float(lo2), float(hi2)))
        if fd_step is None:
            fd_step = (FD_REL_STEP * (hi1 - lo1), FD_REL_STEP * (hi2 - lo2))
        elif np.isscalar(fd_step):
            fd_step = (float(fd_step), float(fd_step))
        self.fd_step = tuple(fd_step)
        self.name = name or self.kind

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} domain={self.domain}>"

    def point(self, params) -> np.ndarray:
        raise NotImplementedError

    def analytic_partials(self, params):
        """Coordinate partials (d/dp1, d/dp2) or None when not available."""
        return None

    def partials(self, params):
        params = np.asarray(params, dtype=float)
        res = self.analytic_partials(params)
        if res is not None:
            return res
        out = []
        for axis, h in enumerate(self.fd_step):
            dp = np.zeros(2)
            dp[axis] = h
            out.append((self.point(params + dp) - self.point(params - dp)) / (2.0 * h))
        return tuple(out)

    def contains(self, params, pad=0.0) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        (lo1, hi1), (lo2, hi2) = self.domain
        return ((params[..., 0] >= lo1 - pad) & (params[..., 0] <= hi1 + pad)
                & (params[..., 1] >= lo2 - pad) & (params[..., 1] <= hi2 + pad))

    def check_region(self, region):
        (a1, b1), (a2, b2) = region
        (lo1, hi1), (lo2, hi2) = self.domain
        tol = 1e-12 * max(1.0, hi1 - lo1, hi2 - lo2)
        if a1 < lo1 - tol or b1 > hi1 + tol or a2 < lo2 - tol or b2 > hi2 + tol or a1 >= b1 or a2 >= b2:
            raise DomainError(f"region {region} escapes domain {self.domain}")


class TGraph(SurfaceChart):
    kind = "t_graph"
    param_names = ("x", "y")
    orientation = -1

    def __init__(self, u, u_x=None, u_y=None, domain=((-1, 1), (-1, 1)), **kw):
        super().__init__(domain, **kw)
        self.u, self.u_x, self.u_y = u, u_x, u_y

    def point(self, params):
        params = np.asarray(params, dtype=float)
        x, y = params[..., 0], params[..., 1]
        return np.stack([x, y, _broadcast(self.u(x, y), x)], axis=-1)

    def analytic_partials(self, params):
        if self.u_x is None or self.u_y is None:
            return None
        x, y = params[..., 0], params[..., 1]
        one, zero = np.ones_like(x), np.zeros_like(x)
        return (np.stack([one, zero, _broadcast(self.u_x(x, y), x)], axis=-1),
                np.stack([zero, one, _broadcast(self.u_y(x, y), x)], axis=-1))

    def height_derivatives(self, params):
        """(u, u_x, u_y) at ``params``, falling back to the chart partials."""
        params = np.asarray(params, dtype=float)
        d1, d2 = self.partials(params)
        return self.point(params)[..., 2], d1[..., 2], d2[..., 2]


class IntrinsicGraph(SurfaceChart):
    kind = "intrinsic_graph"
    param_names = ("x", "t")
    orientation = 1

    def __init__(self, u, u_x=None, u_t=None, domain=((-1, 1), (-1, 1)), **kw):
        super().__init__(domain, **kw)
        self.u, self.u_x, self.u_t = u, u_x, u_t

    def graph_values(self, params):
        """(u, u_x, u_t) at ``params``; finite differences of u when no callbacks."""
        params = np.asarray(params, dtype=float)
        x, t = params[..., 0], params[..., 1]
        u = _broadcast(self.u(x, t), x)
        if self.u_x is not None and self.u_t is not None:
            return u, _broadcast(self.u_x(x, t), x), _broadcast(self.u_t(x, t), x)
        hx, ht = self.fd_step
        ux = (_broadcast(self.u(x + hx, t), x) - _broadcast(self.u(x - hx, t), x)) / (2 * hx)
        ut = (_broadcast(self.u(x, t + ht), x) - _broadcast(self.u(x, t - ht), x)) / (2 * ht)
        return u, ux, ut

    def point(self, params):
        params = np.asarray(params, dtype=float)
        x, t = params[..., 0], params[..., 1]
        u = _broadcast(self.u(x, t), x)
        return np.stack([x, u, t - x * u], axis=-1)

    def analytic_partials(self, params):
        x = params[..., 0]
        u, ux, ut = self.graph_values(params)
        one, zero = np.ones_like(x), np.zeros_like(x)
        return (np.stack([one, ux, -u - x * ux], axis=-1),
                np.stack([zero, ut, one - x * ut], axis=-1))


class RuledChart(SurfaceChart):
    """F(eps, s) = Gamma(eps) + s Z_Gamma(eps), Z_Gamma = A X + B Y with A^2 + B^2 = 1.

    ``seed(eps)`` returns coordinates (..., 3); ``direction(eps)`` returns (A, B) as
    (..., 2).  Their eps-derivatives come from the optional callbacks or from central
    differences with step ``fd_step[0]``.
    """

    kind = "ruled"
    param_names = ("eps", "s")
    # normal = dF/ds x dF/deps
    orientation = -1

    def __init__(self, seed, direction, seed_prime=None, direction_prime=None,
                 domain=((-1, 1), (-1, 1)), **kw):
        super().__init__(domain, **kw)
        self.seed, self.direction = seed, direction
        self.seed_prime, self.direction_prime = seed_prime, direction_prime

    def seed_data(self, eps):
        """Gamma, Gamma', (A, B), (A', B') at ``eps``."""
        eps = np.asarray(eps, dtype=float)
        g = np.asarray(self.seed(eps), dtype=float)
        d = np.asarray(self.direction(eps), dtype=float)
        h = self.fd_step[0]
        if self.seed_prime is not None:
            gp = np.asarray(self.seed_prime(eps), dtype=float)
        else:
            gp = (np.asarray(self.seed(eps + h)) - np.asarray(self.seed(eps - h))) / (2 * h)
        if self.direction_prime is not None:
            dp = np.asarray(self.direction_prime(eps), dtype=float)
        else:
            dp = (np.asarray(self.direction(eps + h)) - np.asarray(self.direction(eps - h))) / (2 * h)
        return g, gp, d, dp

    def point(self, params):
        params = np.asarray(params, dtype=float)
        eps, s = params[..., 0], params[..., 1]
        g = np.asarray(self.seed(eps), dtype=float)
        d = np.asarray(self.direction(eps), dtype=float)
        return horizontal_line_array(g, d[..., 0], d[..., 1], s)

    def analytic_partials(self, params):
        eps, s = params[..., 0], params[..., 1]
        g, gp, d, dp = self.seed_data(eps)
        x, y = g[..., 0], g[..., 1]
        A, B = d[..., 0], d[..., 1]
        xp, yp, tp = gp[..., 0], gp[..., 1], gp[..., 2]
        Ap, Bp = dp[..., 0], dp[..., 1]
        d_s = np.stack([A, B, A * y - B * x], axis=-1)
        d_eps = np.stack([xp + s * Ap, yp + s * Bp,
                          tp + s * (Ap * y + A * yp - Bp * x - B * xp)], axis=-1)
        return d_eps, d_s


class RotatedChart(SurfaceChart):
    """Chart composed with the rotation of angle ``angle`` about the t-axis (an isometry)."""

    def __init__(self, base: SurfaceChart, angle: float):
        super().__init__(base.domain, fd_step=base.fd_step, name=f"rot({base.name},{angle:g})")
        self.base, self.angle = base, float(angle)
        self.kind = base.kind
        self.param_names = base.param_names
        self.orientation = base.orientation

    def _rotate(self, v):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1], v[..., 2]], axis=-1)

    def point(self, params):
        return self._rotate(self.base.point(params))

    def analytic_partials(self, params):
        d1, d2 = self.base.partials(params)
        return self._rotate(d1), self._rotate(d2)


def rotate_chart(chart: SurfaceChart, angle: float) -> RotatedChart:
    return RotatedChart(chart, angle)


# ---------------------------------------------------------------------------
# frame data

class FrameField(NamedTuple):
    """Vectorised frame data; vector entries are frame components with shape (..., 3)."""

    params: np.ndarray
    points: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray
    nh: np.ndarray
    nt: np.ndarray
    nu_h: np.ndarray
    z: np.ndarray
    s: np.ndarray
    jac: np.ndarray

    @property
    def u(self):
        """<N,T>/|N_h|, the function whose Z-derivative enters q."""
        return self.nt / self.nh


def frame_field(chart: SurfaceChart, params, singular_tol: Optional[float] = None) -> FrameField:
    params = np.asarray(params, dtype=float)
    pts = chart.point(params)
    d1, d2 = chart.partials(params)
    e1 = to_frame_array(d1, pts)
    e2 = to_frame_array(d2, pts)
    cr = chart.orientation * cross_array(e1, e2)
    jac = np.linalg.norm(cr, axis=-1)
    if np.any(jac < 1e-14):
        raise DegenerateChart(f"{chart.name}: vanishing normal")
    normal = cr / jac[..., None]
    nh = np.hypot(normal[..., 0], normal[..., 1])
    nt = normal[..., 2]
    if singular_tol is not None and np.any(nh <= singular_tol):
        bad = params[nh <= singular_tol]
        raise SingularPoint(f"{chart.name}: |N_h| <= {singular_tol} at {len(bad)} parameter(s)", bad)
    with np.errstate(invalid="ignore", divide="ignore"):
        nu_h = np.stack([normal[..., 0] / nh, normal[..., 1] / nh, np.zeros_like(nh)], axis=-1)
    z = j_array(nu_h)
    s = nt[..., None] * nu_h
    s[..., 2] -= nh
    return FrameField(params, pts, e1, e2, normal, nh, nt, nu_h, z, s, jac)


def pullback(ff: FrameField, vecs) -> np.ndarray:
    """Parameter velocity w with dF(w) equal to the tangent part of ``vecs``."""
    vecs = np.asarray(vecs, dtype=float)
    g11 = dot_array(ff.e1, ff.e1)
    g12 = dot_array(ff.e1, ff.e2)
    g22 = dot_array(ff.e2, ff.e2)
    r1 = dot_array(ff.e1, vecs)
    r2 = dot_array(ff.e2, vecs)
    det = g11 * g22 - g12 * g12
    return np.stack([(g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det], axis=-1)


def push_forward(ff: FrameField, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w[..., 0:1] * ff.e1 + w[..., 1:2] * ff.e2


@dataclass(frozen=True)
class SurfacePointFrame:
    N: FrameVector
    Nh_norm: float
    NT: float
    nu_h: FrameVector
    Z: FrameVector
    S: FrameVector


def _param_array(param):
    return np.asarray(param, dtype=float).reshape(2)


def unit_normal(chart: SurfaceChart, param) -> FrameVector:
    ff = frame_field(chart, _param_array(param))
    return FrameVector.from_components(ff.normal, Point.from_array(ff.points))


def surface_frame(chart: SurfaceChart, param, singular_tol: float = SINGULAR_TOL) -> SurfacePointFrame:
    ff = frame_field(chart, _param_array(param), singular_tol=singular_tol)
    base = Point.from_array(ff.points)

    def fv(arr):
        return FrameVector.from_components(arr, base)

    return SurfacePointFrame(fv(ff.normal), float(ff.nh), float(ff.nt), fv(ff.nu_h), fv(ff.z), fv(ff.s))


def riemannian_area_element(chart: SurfaceChart, param) -> float:
    return float(frame_field(chart, _param_array(param)).jac)


def param_grid(region, grid):
    """Tensor grid over ``region``; returns (axis1, axis2, params of shape (n1, n2, 2))."""
    (a1, b1), (a2, b2) = region
    n1, n2 = (grid, grid) if np.isscalar(grid) else grid
    g1 = np.linspace(a1, b1, int(n1))
    g2 = np.linspace(a2, b2, int(n2))
    P1, P2 = np.meshgrid(g1, g2, indexing="ij")
    return g1, g2, np.stack([P1, P2], axis=-1)


@dataclass
class SingularScan:
    points: np.ndarray
    bracket_cells: np.ndarray
    nh: np.ndarray

    def __len__(self):
        return len(self.points)


def singular_scan(chart: SurfaceChart, grid=(41, 41), singular_tol: float = SINGULAR_TOL,
                  region=None) -> SingularScan:
    """Grid parameters with |N_h| <= tol, plus cells where both N_h components change sign.

    ``bracket_cells`` holds the lower-left grid indices (i, j) of flagged cells.
    """
    n1, n2 = grid
    if n1 < 2 or n2 < 2:
        raise ValueError("grid must be at least 2x2")
    _, _, P = param_grid(region or chart.domain, grid)
    ff = frame_field(chart, P)
    mask = ff.nh <= singular_tol
    na, nb = ff.normal[..., 0], ff.normal[..., 1]

    def straddles(c):
        corners = np.stack([c[:-1, :-1], c[1:, :-1], c[:-1, 1:], c[1:, 1:]])
        return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)

    cells = np.argwhere(straddles(na) & straddles(nb))
    return SingularScan(P[mask], cells, ff.nh)


# ---------------------------------------------------------------------------
# built-in surfaces

def vertical_plane(a: float = 0.0, domain=((-1, 1), (-1, 1))) -> IntrinsicGraph:
    """Vertical plane y = a x as the intrinsic graph u(x, t) = a x."""
    a = float(a)
    return IntrinsicGraph(lambda x, t: a * x, lambda x, t: a + 0 * x, lambda x, t: 0 * x,
                          domain=domain, name=f"vertical_plane({a:g})")


def paraboloid(domain=((-1, 1), (-1, 1))) -> TGraph:
    """Hyperbolic paraboloid t = x y."""
    return TGraph(lambda x, y: x * y, lambda x, y: y, lambda x, y: x, domain=domain, name="paraboloid")


def helicoid(domain=((-math.pi, math.pi), (-3.0, 3.0))) -> RuledChart:
    """Helicoid (s cos eps, s sin eps, eps), ruled over the t-axis."""
    return RuledChart(
        seed=lambda e: np.stack([0 * e, 0 * e, e + 0.0], axis=-1),
        direction=lambda e: np.stack([np.cos(e), np.sin(e)], axis=-1),
        seed_prime=lambda e: np.stack([0 * e, 0 * e, 1.0 + 0 * e], axis=-1),
        direction_prime=lambda e: np.stack([-np.sin(e), np.cos(e)], axis=-1),
        domain=domain, name="helicoid")


def ruled_vertical_plane(a: float = 0.0, domain=((-1, 1), (-1, 1))) -> RuledChart:
    """Vertical plane y = a x ruled by horizontal lines over the t-axis."""
    n = math.hypot(1.0, a)
    A, B = 1.0 / n, a / n
    return RuledChart(
        seed=lambda e: np.stack([0 * e, 0 * e, e + 0.0], axis=-1),
        direction=lambda e: np.stack([A + 0 * e, B + 0 * e], axis=-1),
        seed_prime=lambda e: np.stack([0 * e, 0 * e, 1.0 + 0 * e], axis=-1),
        direction_prime=lambda e: np.stack([0 * e, 0 * e], axis=-1),
        domain=domain, name=f"ruled_vertical_plane({a:g})")


def _helicoid_angle(x, t, iters=40):
    # eps in (-pi/2, pi/2) solving t = eps + x^2 tan(eps); the left side is increasing
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    lo = np.full(x.shape, -math.pi / 2)
    hi = np.full(x.shape, math.pi / 2)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = mid + x * x * np.tan(mid) > t
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    e = 0.5 * (lo + hi)
    for _ in range(3):
        sec2 = 1.0 + np.tan(e) ** 2
        e = e - (e + x * x * np.tan(e) - t) / (1.0 + x * x * sec2)
    return e


def helicoid_intrinsic(domain=((-1, 1), (-1, 1))) -> IntrinsicGraph:
    """The helicoid written as an intrinsic graph over y = 0: u = x tan(eps(x, t))."""

    def u(x, t):
        return x * np.tan(_helicoid_angle(x, t))

    def derivs(x, t):
        e = _helicoid_angle(x, t)
        tn = np.tan(e)
        sec2 = 1.0 + tn * tn
        e_t = 1.0 / (1.0 + x * x * sec2)
        e_x = -2.0 * x * tn * e_t
        return tn + x * sec2 * e_x, x * sec2 * e_t

    return IntrinsicGraph(u, lambda x, t: derivs(x, t)[0], lambda x, t: derivs(x, t)[1],
                          domain=domain, name="helicoid_intrinsic")


def u_lambda(lam: float = 1.0, domain=((0.1, 1.0), (-1.0, 1.0))) -> TGraph:
    """t-graph of x y - x|x|/lam, smooth away from x = 0."""
    lam = float(lam)
    return TGraph(lambda x, y: x * y - x * np.abs(x) / lam,
                  lambda x, y: y - 2.0 * np.abs(x) / lam,
                  lambda x, y: x + 0 * y,
                  domain=domain, name=f"u_lambda({lam:g})")


def v_lambda(lam: float = 1.0, domain=((-1.0, 1.0), (0.05, 1.0))) -> IntrinsicGraph:
    """Intrinsic graph of sgn(t) sqrt(lam |t|); the chart excludes t = 0."""
    lam = float(lam)
    (_, _), (t0, t1) = domain
    if t0 <= 0.0 <= t1:
        raise DomainError("v_lambda is only defined away from t = 0")
    return IntrinsicGraph(lambda x, t: np.sign(t) * np.sqrt(lam * np.abs(t)) + 0 * x,
                          lambda x, t: 0 * x + 0 * t,
                          lambda x, t: 0.5 * np.sqrt(lam / np.abs(t)) + 0 * x,
                          domain=domain, name=f"v_lambda({lam:g})")


BUILTINS: dict[str, Callable[..., SurfaceChart]] = {
    "vertical_plane": vertical_plane,
    "paraboloid": paraboloid,
    "helicoid": helicoid,
    "helicoid_intrinsic": helicoid_intrinsic,
    "ruled_vertical_plane": ruled_vertical_plane,
    "u_lambda": u_lambda,
    "v_lambda": v_lambda,
}

_BUILTIN_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\))?\s*$")


def builtin(name: str, domain=None) -> SurfaceChart:
    """Resolve names like ``"vertical_plane(1)"`` or ``"helicoid"``."""
    m = _BUILTIN_RE.match(name)
    if not m or m.group(1) not in BUILTINS:
        raise SpecError(f"unknown built-in surface {name!r}; known: {sorted(BUILTINS)}")
    args = [float(a) for a in m.group(2).split(",")] if m.group(2) else []
    kwargs = {"domain": tuple(tuple(float(v) for v in d) for d in domain)} if domain is not None else {}
    try:
        return BUILTINS[m.group(1)](*args, **kwargs)
    except TypeError as exc:
        raise SpecError(f"bad arguments for {name!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# JSON surface specifications

def _lambdify(expr_str, names):
    import sympy

    syms = sympy.symbols(names, real=True)
    local = dict(zip(names, syms))
    try:
        expr = sympy.sympify(expr_str, locals=local)
    except (sympy.SympifyError, TypeError) as exc:
        raise SpecError(f"cannot parse formula {expr_str!r}") from exc
    if not expr.free_symbols <= set(syms):
        raise SpecError(f"formula {expr_str!r} uses unknown symbols {expr.free_symbols - set(syms)}")

    def make(e):
        f = sympy.lambdify(syms, e, "numpy")
        return lambda *args: np.broadcast_to(np.asarray(f(*args), dtype=float),
                                             np.broadcast(*args).shape).astype(float)

    return expr, syms, make


def _graph_from_formula(cls, names, spec, domain, mode, h):
    expr, syms, make = _lambdify(spec["formula"], names)
    u = make(expr)
    if mode == "analytic":
        import sympy

        d1 = make(sympy.diff(expr, syms[0]))
        d2 = make(sympy.diff(expr, syms[1]))
        return cls(u, d1, d2, domain=domain, fd_step=h, name=spec.get("name", spec["formula"]))
    return cls(u, domain=domain, fd_step=h, name=spec.get("name", spec["formula"]))


def _graph_from_table(cls, spec, domain, h):
    from scipy.interpolate import RectBivariateSpline

    tab = spec["table"]
    g1 = np.asarray(tab["axis1"], dtype=float)
    g2 = np.asarray(tab["axis2"], dtype=float)
    vals = np.asarray(tab["values"], dtype=float)
    if vals.shape != (len(g1), len(g2)):
        raise SpecError(f"table values shape {vals.shape} != ({len(g1)}, {len(g2)})")
    spl = RectBivariateSpline(g1, g2, vals, kx=3, ky=3)
    u = lambda a, b: spl.ev(a, b)
    d1 = lambda a, b: spl.ev(a, b, dx=1)
    d2 = lambda a, b: spl.ev(a, b, dy=1)
    return cls(u, d1, d2, domain=domain, fd_step=h, name=spec.get("name", "table"))


def chart_from_spec(spec: dict) -> SurfaceChart:
    """Build a chart from a decoded surface specification.

    Accepted keys: ``builtin`` (e.g. ``"helicoid"``) or ``kind`` with ``formula`` /
    ``table`` (graphs) or ``seed``/``direction`` formulas in ``e`` (ruled, or
    ``seed_samples``/``direction_samples``).  Optional: ``domain``,
    ``derivative_mode`` (``analytic`` | ``fd``), ``h``.
    """
    if not isinstance(spec, dict):
        raise SpecError("surface spec must be a JSON object")
    domain = spec.get("domain")
    if "builtin" in spec:
        return builtin(spec["builtin"], domain=domain)
    kind = spec.get("kind")
    mode = spec.get("derivative_mode", "analytic")
    if mode not in ("analytic", "fd"):
        raise SpecError(f"derivative_mode must be 'analytic' or 'fd', got {mode!r}")
    h = spec.get("h")
    if domain is None:
        raise SpecError("surface spec needs a domain [[min, max], [min, max]]")
    try:
        domain = tuple(tuple(float(v) for v in d) for d in domain)
        if len(domain) != 2 or any(len(d) != 2 for d in domain):
            raise ValueError
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad domain {spec.get('domain')!r}") from exc
    if kind == "t_graph":
        cls, names = TGraph, ["x", "y"]
    elif kind == "intrinsic_graph":
        cls, names = IntrinsicGraph, ["x", "t"]
    elif kind == "ruled":
        return _ruled_from_spec(spec, domain, mode, h)
    else:
        raise SpecError(f"unknown surface kind {kind!r}")
    if "formula" in spec:
        return _graph_from_formula(cls, names, spec, domain, mode, h)
    if "table" in spec:
        return _graph_from_table(cls, spec, domain, h)
    raise SpecError("graph spec needs 'formula' or 'table'")


def _ruled_from_spec(spec, domain, mode, h):
    if "seed_samples" in spec:
        from .characteristic import ruled_from_seed

        return ruled_from_seed(np.asarray(spec["seed_samples"], dtype=float),
                               np.asarray(spec["direction_samples"], dtype=float),
                               eps=np.asarray(spec["eps"], dtype=float) if "eps" in spec else None,
                               s_range=domain[1])
    try:
        seed_exprs = [str(v) for v in spec["seed"]]
        dir_exprs = [str(v) for v in spec["direction"]]
    except KeyError as exc:
        raise SpecError("ruled spec needs 'seed' (3 formulas) and 'direction' (2 formulas) in e") from exc
    if len(seed_exprs) != 3 or len(dir_exprs) != 2:
        raise SpecError("ruled spec needs 3 seed formulas and 2 direction formulas")
    import sympy

    built = [_lambdify(ex, ["e"]) for ex in seed_exprs + dir_exprs]
    fns = [mk(ex) for ex, _, mk in built]
    seed = lambda e: np.stack([f(e) for f in fns[:3]], axis=-1)

    def direction(e):
        d = np.stack([f(e) for f in fns[3:]], axis=-1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    seed_prime = None
    if mode == "analytic":
        dfns = [mk(sympy.diff(ex, syms[0])) for ex, syms, mk in built[:3]]
        seed_prime = lambda e: np.stack([f(e) for f in dfns], axis=-1)
    return RuledChart(seed, direction, seed_prime=seed_prime, domain=domain,
                      fd_step=h, name=spec.get("name", "ruled"))


def load_surface(arg, domain=None) -> SurfaceChart:
    """Built-in name, path to a JSON spec, or an already decoded dict."""
    if isinstance(arg, SurfaceChart):
        return arg
    if isinstance(arg, dict):
        return chart_from_spec(arg)
    path = Path(str(arg))
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise SpecError(f"surface spec {path} does not exist")
        try:
            spec = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
        return chart_from_spec(spec)
    return builtin(str(arg), domain=domain)
