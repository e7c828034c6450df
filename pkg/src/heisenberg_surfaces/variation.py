"""Area, first and second variation, flux of Killing fields and stability.

All surface integrals are composite Simpson sums over a tensor grid of chart parameters
(:class:`SurfaceGrid`).  Derivatives in the Z direction are fourth-order differences
along characteristic curves traced through every node; derivatives in the S direction
use straight parameter steps along the pull-back of S.

The pseudo-hermitian connection makes X, Y, T parallel, so for a field U with frame
components U^i the horizontal divergence is <grad_Z U, Z> = sum_i Z(U^i) Z^i, and the
mean curvature is H = sum_i Z(nu_h^i) Z^i.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .characteristic import (
    FD_STENCIL_STEP,
    ZStencil,
    deformation_vectors,
    rk4_step,
    vertical_component_poly,
)
from .codazzi import q_dichotomy
from .core import cross_array, dot_array, j_array, to_euclidean_array, to_frame_array
from .errors import HeisenbergError, PolynomialRoot, SingularPoint, SupportError
from .surface import (
    SINGULAR_TOL,
    FrameField,
    IntrinsicGraph,
    RuledChart,
    SurfaceChart,
    frame_field,
    param_grid,
    pullback,
)

DEFAULT_GRID = (201, 201)
SUPPORT_TOL = 1e-12
SINGULAR_MARGIN = 10


# ---------------------------------------------------------------------------
# quadrature grid

def simpson_weights(nodes: np.ndarray) -> np.ndarray:
    """Weights w with sum(w * f(nodes)) equal to scipy's composite Simpson rule."""
    return simpson(np.eye(len(nodes)), x=nodes, axis=-1)


class SurfaceGrid:
    """Tensor grid on a parameter rectangle with cached frames and Z-stencils."""

    def __init__(self, chart: SurfaceChart, region=None, grid=DEFAULT_GRID, h: float = FD_STENCIL_STEP,
                 singular_tol: float = SINGULAR_TOL):
        region = chart.domain if region is None else tuple(tuple(map(float, r)) for r in region)
        chart.check_region(region)
        n1, n2 = (grid, grid) if np.isscalar(grid) else grid
        if n1 < 3 or n2 < 3:
            raise HeisenbergError("grid needs at least 3 nodes per axis")
        self.chart, self.region, self.grid, self.h = chart, region, (int(n1), int(n2)), h
        self.singular_tol = singular_tol
        self.g1, self.g2, self.params = param_grid(region, self.grid)
        self.weights = np.outer(simpson_weights(self.g1), simpson_weights(self.g2))
        self._ff = None
        self._zst = None
        self._zframes = None

    @property
    def steps(self):
        return self.g1[1] - self.g1[0], self.g2[1] - self.g2[0]

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * values))

    @property
    def ff(self) -> FrameField:
        if self._ff is None:
            self._ff = frame_field(self.chart, self.params)
        return self._ff

    def check_regular(self):
        """Raise unless |N_h| stays above the tolerance on the region grown by a margin."""
        (a1, b1), (a2, b2) = self.region
        s1, s2 = self.steps
        grown = ((a1 - SINGULAR_MARGIN * s1, b1 + SINGULAR_MARGIN * s1),
                 (a2 - SINGULAR_MARGIN * s2, b2 + SINGULAR_MARGIN * s2))
        (lo1, hi1), (lo2, hi2) = self.chart.domain
        grown = ((max(grown[0][0], lo1), min(grown[0][1], hi1)), (max(grown[1][0], lo2), min(grown[1][1], hi2)))
        _, _, P = param_grid(grown, (self.grid[0] + 2 * SINGULAR_MARGIN, self.grid[1] + 2 * SINGULAR_MARGIN))
        nh = frame_field(self.chart, P).nh
        if np.any(nh <= self.singular_tol):
            raise SingularPoint(f"{self.chart.name}: region {self.region} is within {SINGULAR_MARGIN} grid "
                                "steps of the singular set", P[nh <= self.singular_tol])
        return self

    @property
    def zstencil(self) -> ZStencil:
        if self._zst is None:
            self.check_regular()
            self._zst = ZStencil.build(self.chart, self.params, self.h)
        return self._zst

    @property
    def zframes(self) -> list:
        """Frame fields at the five stencil slices (index 2 is the grid itself)."""
        if self._zframes is None:
            st = self.zstencil
            self._zframes = [frame_field(self.chart, st.params[i]) if i != 2 else self.ff for i in range(5)]
        return self._zframes

    def z_derivative(self, values_on_stencil) -> np.ndarray:
        return self.zstencil.d1(values_on_stencil)

    def z_second_derivative(self, values_on_stencil) -> np.ndarray:
        return self.zstencil.d2(values_on_stencil)

    def on_stencil(self, func: Callable) -> np.ndarray:
        """Evaluate ``func(params)`` on all five stencil slices."""
        return np.stack([func(p) for p in self.zstencil.params])

    def s_derivative(self, func: Callable) -> np.ndarray:
        """S(g) for ``g = func(params)`` by straight fourth-order steps along pullback(S)."""
        w = pullback(self.ff, self.ff.s)
        h = self.h
        vals = [func(self.params + k * h * w) for k in (-2, -1, 1, 2)]
        return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)

    @property
    def q(self) -> np.ndarray:
        """q = 4 (Z(u) + u^2) at every node."""
        us = np.stack([f.u for f in self.zframes])
        return 4.0 * (self.zstencil.d1(us) + self.ff.u ** 2)

    @property
    def sub_riemannian_element(self) -> np.ndarray:
        return self.ff.nh * self.ff.jac


# ---------------------------------------------------------------------------
# test functions and vector fields

def _smooth_profile(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri))
    return out


def _smooth_profile_d(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri)) * (-2.0 * ri / (1.0 - ri * ri) ** 2)
    return out


def _poly_profile(r, m=3):
    r = np.asarray(r, dtype=float)
    return np.where(np.abs(r) < 1.0, (1.0 - r * r) ** m, 0.0)


def _poly_profile_d(r, m=3):
    r = np.asarray(r, dtype=float)
    return np.where(np.abs(r) < 1.0, -2.0 * m * r * (1.0 - r * r) ** (m - 1), 0.0)


@dataclass
class Bump1D:
    """phi(x) = profile((x - center)/radius).

    ``kind='poly'`` is (1 - r^2)^power, of class C^(power-1); ``kind='smooth'`` is the
    C-infinity bump exp(1 - 1/(1 - r^2)).  Both equal 1 at the center.
    """

    center: float = 0.0
    radius: float = 1.0
    kind: str = "poly"
    power: int = 3

    def _r(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.radius

    def __call__(self, x):
        if self.kind == "smooth":
            return _smooth_profile(self._r(x))
        return _poly_profile(self._r(x), self.power)

    def derivative(self, x):
        if self.kind == "smooth":
            return _smooth_profile_d(self._r(x)) / self.radius
        return _poly_profile_d(self._r(x), self.power) / self.radius


class TestFunction:
    """Scalar function of chart parameters with optional analytic gradient."""

    __test__ = False  # not a pytest class

    def __init__(self, func: Callable, grad: Optional[Callable] = None, fd_step: float = 1e-6, name="f"):
        self.func, self.grad, self.fd_step, self.name = func, grad, fd_step, name

    def __call__(self, params):
        p = np.asarray(params, dtype=float)
        return np.broadcast_to(np.asarray(self.func(p), dtype=float), p.shape[:-1]).astype(float)

    def gradient(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(p), dtype=float)
        h = self.fd_step
        e = np.eye(2)
        return np.stack([(self(p + h * e[k]) - self(p - h * e[k])) / (2 * h) for k in range(2)], axis=-1)

    def __add__(self, other):
        return TestFunction(lambda p: self(p) + other(p), lambda p: self.gradient(p) + other.gradient(p))

    def scale(self, k):
        return TestFunction(lambda p: k * self(p), lambda p: k * self.gradient(p))


ZERO = TestFunction(lambda p: np.zeros(np.shape(p)[:-1]), lambda p: np.zeros(np.shape(p)), name="zero")


def bump(center, radii, kind: str = "poly", amplitude: float = 1.0, power: int = 3) -> TestFunction:
    """Product bump amplitude * phi((p1-c1)/r1) * phi((p2-c2)/r2) supported in a box."""
    b1 = Bump1D(center[0], radii[0], kind, power)
    b2 = Bump1D(center[1], radii[1], kind, power)

    def f(p):
        return amplitude * b1(p[..., 0]) * b2(p[..., 1])

    def g(p):
        return amplitude * np.stack([b1.derivative(p[..., 0]) * b2(p[..., 1]),
                                     b1(p[..., 0]) * b2.derivative(p[..., 1])], axis=-1)

    tf = TestFunction(f, g, name=f"bump({center},{radii},{kind})")
    tf.box = ((center[0] - radii[0], center[0] + radii[0]), (center[1] - radii[1], center[1] + radii[1]))
    return tf


def random_bump(rng: np.random.Generator, region, kind: str = "poly", margin: float = 0.1,
                power: int = 8) -> TestFunction:
    """A bump whose support box sits inside ``region`` shrunk by ``margin`` (relative).

    The default (1 - r^2)^8 profile is C^7, smooth enough that the fourth-order stencils
    and Simpson sums stay at their nominal order across the edge of the support.
    """
    (a1, b1), (a2, b2) = region
    m1, m2 = margin * (b1 - a1), margin * (b2 - a2)
    r1 = rng.uniform(0.15, 0.4) * (b1 - a1)
    r2 = rng.uniform(0.15, 0.4) * (b2 - a2)
    c1 = rng.uniform(a1 + m1 + r1, b1 - m1 - r1)
    c2 = rng.uniform(a2 + m2 + r2, b2 - m2 - r2)
    return bump((c1, c2), (r1, r2), kind, amplitude=rng.uniform(0.5, 2.0), power=power)


class VectorField:
    """Field along the surface, in frame components.

    ``on_surface(grid_like, chart, params, ff)`` returns (..., 3).  Fields that also
    extend to H^1 implement ``ambient(points)``; only those can drive the flow oracle.
    """

    compact = True
    name = "U"

    def on_surface(self, chart, params, ff) -> np.ndarray:
        return self.ambient(ff.points)

    def ambient(self, points) -> np.ndarray:
        raise HeisenbergError(f"{self.name} has no extension off the surface")


class KillingField(VectorField):
    """cx (X - 2yT) + cy (Y + 2xT) + ct T."""

    compact = False

    def __init__(self, cx=0.0, cy=0.0, ct=0.0):
        self.coeffs = (float(cx), float(cy), float(ct))
        self.name = f"killing{self.coeffs}"

    def ambient(self, points):
        p = np.asarray(points, dtype=float)
        cx, cy, ct = self.coeffs
        x, y = p[..., 0], p[..., 1]
        return np.stack([np.full_like(x, cx), np.full_like(x, cy), ct - 2 * cx * y + 2 * cy * x], axis=-1)


KILLING_GENERATORS = {"X-2yT": KillingField(1, 0, 0), "Y+2xT": KillingField(0, 1, 0), "T": KillingField(0, 0, 1)}


class ConstantFrameField(VectorField):
    """phi(p) (a X + b Y + c T) with phi a function of the ambient point."""

    def __init__(self, phi: Callable, comps, name="phi*V"):
        self.phi, self.comps, self.name = phi, np.asarray(comps, dtype=float), name

    def ambient(self, points):
        p = np.asarray(points, dtype=float)
        return self.phi(p)[..., None] * self.comps


class GraphBumpField(VectorField):
    """phi Y on an intrinsic graph, phi extended to H^1 as constant along Y-lines.

    The Y-line through (x, 0, t') is (x, s, t' - x s), so the extension of phi(x, t) is
    (x, y, t) -> phi(x, t + x y); its flow for time r maps G_u onto G_{u + r phi}.
    """

    def __init__(self, phi: TestFunction):
        self.phi, self.name = phi, "phi*Y"

    def ambient(self, points):
        p = np.asarray(points, dtype=float)
        x, y, t = p[..., 0], p[..., 1], p[..., 2]
        val = self.phi(np.stack([x, t + x * y], axis=-1))
        return val[..., None] * np.array([0.0, 1.0, 0.0])


class SurfaceFunctionField(VectorField):
    """phi(params) times a frame-derived direction ('nu_h', 'z', 's', 'normal', 'x', 'y', 't')."""

    def __init__(self, phi: TestFunction, direction: str = "nu_h"):
        self.phi, self.direction, self.name = phi, direction, f"phi*{direction}"

    def on_surface(self, chart, params, ff):
        fixed = {"x": [1.0, 0, 0], "y": [0, 1.0, 0], "t": [0, 0, 1.0]}
        if self.direction in fixed:
            d = np.broadcast_to(np.array(fixed[self.direction]), ff.points.shape)
        else:
            d = getattr(ff, self.direction)
        return self.phi(params)[..., None] * d


def _support_check(grid: SurfaceGrid, f: TestFunction, what="test function"):
    vals = f(grid.params)
    edge = np.concatenate([vals[:2].ravel(), vals[-2:].ravel(), vals[:, :2].ravel(), vals[:, -2:].ravel()])
    if np.max(np.abs(edge), initial=0.0) > SUPPORT_TOL:
        raise SupportError(f"{what} does not vanish near the boundary of {grid.region}")
    return vals


def _field_support_check(grid: SurfaceGrid, U: VectorField):
    if not U.compact:
        return
    vals = U.on_surface(grid.chart, grid.params, grid.ff)
    mag = np.linalg.norm(vals, axis=-1)
    edge = np.concatenate([mag[:2].ravel(), mag[-2:].ravel(), mag[:, :2].ravel(), mag[:, -2:].ravel()])
    if np.max(edge, initial=0.0) > SUPPORT_TOL:
        raise SupportError(f"{U.name} does not vanish near the boundary of {grid.region}")


def _as_grid(chart, region, grid) -> SurfaceGrid:
    if isinstance(grid, SurfaceGrid):
        return grid
    return SurfaceGrid(chart, region, DEFAULT_GRID if grid is None else grid)


# ---------------------------------------------------------------------------
# area

def sub_riemannian_integrand(chart: SurfaceChart, params) -> np.ndarray:
    """|N_h| times the Riemannian Jacobian, defined on singular points as well."""
    params = np.asarray(params, dtype=float)
    pts = chart.point(params)
    d1, d2 = chart.partials(params)
    cr = cross_array(to_frame_array(d1, pts), to_frame_array(d2, pts))
    return np.hypot(cr[..., 0], cr[..., 1])


def area(chart: SurfaceChart, region=None, grid=DEFAULT_GRID) -> float:
    """Sub-Riemannian area of the image of ``region``."""
    g = _as_grid(chart, region, grid)
    return g.integrate(sub_riemannian_integrand(chart, g.params))


def riemannian_area(chart: SurfaceChart, region=None, grid=DEFAULT_GRID) -> float:
    g = _as_grid(chart, region, grid)
    return g.integrate(g.ff.jac)


# ---------------------------------------------------------------------------
# first variation

def first_variation_graph(chart: IntrinsicGraph, phi: TestFunction, region=None, grid=DEFAULT_GRID) -> float:
    """Derivative of the area of G_{u + r phi} at r = 0 (intrinsic graphs)."""
    if not isinstance(chart, IntrinsicGraph):
        raise HeisenbergError("first_variation_graph needs an intrinsic graph")
    g = _as_grid(chart, region, grid)
    vals = _support_check(g, phi)
    u, ux, ut = chart.graph_values(g.params)
    grad = phi.gradient(g.params)
    w = ux + 2.0 * u * ut
    integrand = w / np.sqrt(1.0 + w * w) * (grad[..., 0] + 2.0 * u * grad[..., 1] + 2.0 * vals * ut)
    return g.integrate(integrand)


def first_variation_terms(chart: SurfaceChart, U: VectorField, region=None, grid=DEFAULT_GRID) -> dict:
    """The three integrals -S<U,T>, -2<J(U),S> and |N_h| div^h U, each against dSigma."""
    g = _as_grid(chart, region, grid)
    g.check_regular()
    _field_support_check(g, U)
    ff = g.ff

    def ut(params):
        return U.on_surface(chart, params, frame_field(chart, params))[..., 2]

    s_term = -g.s_derivative(ut)
    j_term = -2.0 * dot_array(j_array(U.on_surface(chart, g.params, ff)), ff.s)
    comps = np.stack([U.on_surface(chart, st.params, st) for st in g.zframes])
    div = np.sum(g.z_derivative(comps) * ff.z, axis=-1)
    terms = {"S_term": g.integrate(s_term * ff.jac), "J_term": g.integrate(j_term * ff.jac),
             "div_term": g.integrate(ff.nh * div * ff.jac)}
    terms["value"] = terms["S_term"] + terms["J_term"] + terms["div_term"]
    return terms


def first_variation_general(chart: SurfaceChart, U: VectorField, region=None, grid=DEFAULT_GRID) -> float:
    """Integral of -S<U,T> - 2<J(U),S> + |N_h| div^h U over the surface."""
    return first_variation_terms(chart, U, region, grid)["value"]


def mean_curvature_field(g: SurfaceGrid) -> np.ndarray:
    nus = np.stack([f.nu_h for f in g.zframes])
    return np.sum(g.z_derivative(nus) * g.ff.z, axis=-1)


def mean_curvature(chart: SurfaceChart, params, h: float = FD_STENCIL_STEP) -> np.ndarray:
    """H = <grad_Z nu_h, Z> at ``params`` (any array shape (..., 2))."""
    params = np.asarray(params, dtype=float)
    ff = frame_field(chart, params, singular_tol=SINGULAR_TOL)
    st = ZStencil.build(chart, params, h)
    nus = np.stack([frame_field(chart, p).nu_h for p in st.params])
    H = np.sum(st.d1(nus) * ff.z, axis=-1)
    return float(H) if H.ndim == 0 else H


def first_variation_H(chart: SurfaceChart, U: VectorField, region=None, grid=DEFAULT_GRID) -> float:
    """Integral of <U,N> H dSigma.

    With N the chart normal and H = <grad_Z nu_h, Z>, this is the sign for which the
    value equals the first variation computed by the other two evaluators.
    """
    g = _as_grid(chart, region, grid)
    g.check_regular()
    _field_support_check(g, U)
    un = dot_array(U.on_surface(chart, g.params, g.ff), g.ff.normal)
    return g.integrate(un * mean_curvature_field(g) * g.ff.jac)


class FlowedChart(SurfaceChart):
    """The chart composed with the time-``tau`` flow of an ambient field (RK4)."""

    def __init__(self, base: SurfaceChart, U: VectorField, tau: float, steps: int = 4):
        super().__init__(base.domain, fd_step=base.fd_step, name=f"{base.name}+flow")
        self.base, self.U, self.tau, self.steps = base, U, tau, steps
        self.orientation = base.orientation

    def _velocity(self, pts):
        return to_euclidean_array(self.U.ambient(pts), pts)

    def point(self, params):
        pts = self.base.point(params)
        dt = self.tau / self.steps
        for _ in range(self.steps):
            pts = rk4_step(self._velocity, pts, dt)
        return pts


def first_variation_flow(chart: SurfaceChart, U: VectorField, region=None, grid=DEFAULT_GRID,
                         tau: float = 1e-4) -> float:
    """Central difference of the area under the flow of ``U`` (independent oracle)."""
    g = _as_grid(chart, region, grid)
    plus = area(FlowedChart(chart, U, tau), g.region, g)
    minus = area(FlowedChart(chart, U, -tau), g.region, g)
    return (plus - minus) / (2.0 * tau)


def first_variation_graph_fd(chart: IntrinsicGraph, phi: TestFunction, region=None, grid=DEFAULT_GRID,
                             h: float = 1e-4) -> float:
    """(A(G_{u+h phi}) - A(G_{u-h phi})) / 2h with the same quadrature."""
    g = _as_grid(chart, region, grid)

    def shifted(sign):
        def u(x, t):
            return chart.u(x, t) + sign * h * phi(np.stack(np.broadcast_arrays(x, t), axis=-1))

        def derivs(x, t):
            p = np.stack(np.broadcast_arrays(x, t), axis=-1)
            _, ux, ut = chart.graph_values(p)
            gr = phi.gradient(p)
            return ux + sign * h * gr[..., 0], ut + sign * h * gr[..., 1]

        return IntrinsicGraph(u, lambda x, t: derivs(x, t)[0], lambda x, t: derivs(x, t)[1], chart.domain)

    return (area(shifted(1.0), g.region, g) - area(shifted(-1.0), g.region, g)) / (2.0 * h)


# ---------------------------------------------------------------------------
# flux through a closed polyline

def _polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def flux(chart: SurfaceChart, boundary, U: VectorField, nodes_per_edge: int = 201,
         singular_tol: float = SINGULAR_TOL) -> dict:
    """Line integral of <<U,T> S - |N_h| U_ht, xi> over a closed parameter polyline.

    ``xi`` is the unit inner conormal (tangent to the surface, normal to the curve,
    pointing into the enclosed patch).  Returns the value and the Riemannian perimeter.
    """
    V = np.asarray(boundary, dtype=float)
    if np.allclose(V[0], V[-1]):
        V = V[:-1]
    if len(V) < 3:
        raise HeisenbergError("boundary needs at least three vertices")
    orient = np.sign(_polygon_area(V))
    if orient == 0:
        raise HeisenbergError("degenerate boundary polygon")
    total, perimeter = 0.0, 0.0
    n = nodes_per_edge if nodes_per_edge % 2 else nodes_per_edge + 1
    r = np.linspace(0.0, 1.0, n)
    for k in range(len(V)):
        p0, p1 = V[k], V[(k + 1) % len(V)]
        d = p1 - p0
        params = p0 + r[:, None] * d
        if not np.all(chart.contains(params)):
            raise HeisenbergError("boundary leaves the chart domain")
        ff = frame_field(chart, params, singular_tol=singular_tol)
        tau = d[0] * ff.e1 + d[1] * ff.e2  # dF/dr
        speed = np.linalg.norm(tau, axis=-1)
        tang = tau / speed[:, None]
        xi = cross_array(ff.normal, tang)
        # inner side in parameter space: left of the edge for counter-clockwise polygons
        inward = orient * np.array([-d[1], d[0]])
        sign = np.sign(pullback(ff, xi) @ inward)
        xi = xi * sign[:, None]
        Uc = U.on_surface(chart, params, ff)
        u_ht = dot_array(Uc, ff.z)[:, None] * ff.z
        w = Uc[:, 2:3] * ff.s - ff.nh[:, None] * u_ht
        total += simpson(dot_array(w, xi) * speed, x=r)
        perimeter += simpson(speed, x=r)
    return {"value": float(total), "perimeter": float(perimeter)}


def rectangle(region) -> np.ndarray:
    (a1, b1), (a2, b2) = region
    return np.array([[a1, a2], [b1, a2], [b1, b2], [a1, b2]], dtype=float)


# ---------------------------------------------------------------------------
# divergence identity, q and the stability form

def divergence_identity_value(chart: SurfaceChart, f: TestFunction, g_fn: TestFunction, region=None,
                              grid=DEFAULT_GRID) -> float:
    """Integral of {Z(f)Z(g) + f Z(Z(g)) + 2 u f Z(g)} |N_h| dSigma, u = <N,T>/|N_h|."""
    g = _as_grid(chart, region, grid)
    fv = _support_check(g, f)
    _support_check(g, g_fn)
    fs = g.on_stencil(f)
    gs = g.on_stencil(g_fn)
    zf, zg, zzg = g.z_derivative(fs), g.z_derivative(gs), g.z_second_derivative(gs)
    integrand = zf * zg + fv * zzg + 2.0 * g.ff.u * fv * zg
    return g.integrate(integrand * g.sub_riemannian_element)


def divergence_identity_residual(chart, f, g_fn, region=None, grid=DEFAULT_GRID) -> float:
    return abs(divergence_identity_value(chart, f, g_fn, region, grid))


def q_function(chart: SurfaceChart, params, h: float = FD_STENCIL_STEP) -> np.ndarray:
    """q = 4 (Z(u) + u^2), u = <N,T>/|N_h|, with Z(u) along the traced characteristic."""
    params = np.asarray(params, dtype=float)
    ff = frame_field(chart, params, singular_tol=SINGULAR_TOL)
    st = ZStencil.build(chart, params, h)
    us = np.stack([frame_field(chart, p).u for p in st.params])
    q = 4.0 * (st.d1(us) + ff.u ** 2)
    return float(q) if q.ndim == 0 else q


def q_ruled_cross_check(chart: RuledChart, eps: float, s_values, n: int = 601) -> float:
    """max |q_function - q_along_line(fitted coefficients)| on the ruling through Gamma(eps)."""
    from .codazzi import fit_codazzi_coeffs, q_along_line, ruling_profile

    lo, hi = chart.domain[1]
    half = min(-lo, hi)
    coeffs = fit_codazzi_coeffs(ruling_profile(chart, eps, np.linspace(-half, half, n)))
    s_values = np.asarray(s_values, dtype=float)
    q_num = q_function(chart, np.stack([np.full_like(s_values, eps), s_values], axis=-1))
    return float(np.max(np.abs(q_num - q_along_line(coeffs, s_values))))


@dataclass
class StabilityReport:
    Q_value: float
    gradient_term: float
    q_term: float
    k: Optional[int] = None
    verdict: str = ""

    def __post_init__(self):
        if not self.verdict:
            self.verdict = "negative" if self.Q_value < 0 else "nonnegative"

    def as_dict(self):
        return {"Q_value": self.Q_value, "gradient_term": self.gradient_term, "q_term": self.q_term,
                "k": self.k, "verdict": self.verdict}


def stability_form(chart: SurfaceChart, f: TestFunction, region=None, grid=DEFAULT_GRID) -> StabilityReport:
    """Q(f,f) = integral of {Z(f)^2 - q f^2} |N_h| dSigma."""
    g = _as_grid(chart, region, grid)
    fv = _support_check(g, f)
    zf = g.z_derivative(g.on_stencil(f))
    elem = g.sub_riemannian_element
    grad = g.integrate(zf * zf * elem)
    qt = g.integrate(g.q * fv * fv * elem)
    return StabilityReport(grad - qt, grad, qt)


# ---------------------------------------------------------------------------
# instability search on ruled charts

@dataclass
class StripPolys:
    eps: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def p(self, s):
        return self.a[:, None] + self.b[:, None] * s[None, :] + self.c[:, None] * s[None, :] ** 2

    @property
    def discriminant(self):
        return self.b ** 2 - 4.0 * self.a * self.c

    def q(self, s):
        """q = -(b^2 - 4ac)/p^2 along each ruling."""
        return -self.discriminant[:, None] / self.p(s) ** 2


def strip_polys(chart: RuledChart, eps_nodes) -> StripPolys:
    polys = [vertical_component_poly(chart, e).oriented() for e in eps_nodes]
    return StripPolys(np.asarray(eps_nodes, dtype=float), *(np.array([getattr(p, k) for p in polys])
                                                             for k in "abc"))


@dataclass
class InstabilityResult:
    reports: list
    first_negative_k: Optional[int]
    verdict: str
    q_check: float = 0.0
    gradient_ratios: dict = field(default_factory=dict)

    def as_dict(self):
        return {"verdict": self.verdict, "first_negative_k": self.first_negative_k, "q_check": self.q_check,
                "gradient_ratios": {str(k): v for k, v in self.gradient_ratios.items()},
                "reports": [r.as_dict() for r in self.reports]}


def reduced_index_form(polys: StripPolys, phi: Bump1D, k: float, n_s: int = 801) -> StabilityReport:
    """int (d u_k/ds)^2 - (3/4) int q u_k^2 over (eps, s), u_k = phi(eps) phi(s/k)."""
    lo, hi = phi.center - phi.radius, phi.center + phi.radius
    s = np.linspace(k * lo, k * hi, n_s)
    pe = phi(polys.eps)
    ps, dps = phi(s / k), phi.derivative(s / k) / k
    p = polys.p(s)
    if np.any(np.abs(p) < 1e-12) or np.any(np.sign(p) != np.sign(p[:, :1])):
        raise PolynomialRoot("p_eps has a root on the strip although q > 0")
    grad_int = np.outer(pe ** 2, dps ** 2)
    q_int = 0.75 * polys.q(s) * np.outer(pe ** 2, ps ** 2)
    we, ws = simpson_weights(polys.eps), simpson_weights(s)
    G = float(we @ grad_int @ ws)
    Qt = float(we @ q_int @ ws)
    return StabilityReport(G - Qt, G, Qt, k=int(k) if float(k).is_integer() else k)


def instability_search(chart: RuledChart, phi: Optional[Bump1D] = None, k_max: int = 64,
                       eps_nodes: int = 201, n_s: int = 801, q_tol: float = 1e-8,
                       check_s: int = 41) -> InstabilityResult:
    """Sweep k = 1..k_max of the reduced index form with test functions u_k v^-1.

    q on the strip is first computed from the frames on the chart's s-range; a vanishing
    q short-circuits to the vertical-plane verdict, a sign change is an error.
    """
    phi = Bump1D(0.0, 1.0, "poly") if phi is None else phi
    (e_lo, e_hi), (s_lo, s_hi) = chart.domain
    lo, hi = phi.center - phi.radius, phi.center + phi.radius
    if lo < e_lo or hi > e_hi:
        raise SupportError(f"phi support [{lo}, {hi}] leaves the eps-range {chart.domain[0]}")
    # frames on the sampled strip, away from its ends so that Z-stencils stay inside
    pad = 4 * FD_STENCIL_STEP
    ec = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 9)
    sc = np.linspace(s_lo + pad, s_hi - pad, check_s)
    E, S = np.meshgrid(ec, sc, indexing="ij")
    q_frames = q_function(chart, np.stack([E, S], axis=-1))
    verdict = q_dichotomy(q_frames, q_tol)
    if verdict == "zero":
        return InstabilityResult([], None, "q_zero")
    if verdict != "positive":
        raise HeisenbergError(f"q is {verdict} on the sampled strip")
    polys = strip_polys(chart, np.linspace(lo, hi, eps_nodes))
    q_poly = strip_polys(chart, ec).q(sc)
    q_check = float(np.max(np.abs(q_poly - q_frames)))
    reports = [reduced_index_form(polys, phi, k, n_s) for k in range(1, k_max + 1)]
    first = next((r.k for r in reports if r.Q_value < 0), None)
    ratios = {k: reports[2 * k - 1].gradient_term / reports[k - 1].gradient_term
              for k in (1, 2, 4, 8, 16, 32) if 2 * k <= k_max}
    return InstabilityResult(reports, first, "negative" if first is not None else "nonnegative", q_check, ratios)


def index_test_function(chart: RuledChart, phi: Bump1D, k: float) -> TestFunction:
    """f = u_k / v with v = |p_eps(s)|^(1/2) from the fitted vertical polynomial."""
    cache = {}

    def f(p):
        e, s = p[..., 0], p[..., 1]
        key = np.round(e, 12)
        uniq, inv = np.unique(key, return_inverse=True)
        for val in uniq:
            if val not in cache:
                cache[val] = vertical_component_poly(chart, float(val))
        a = np.array([cache[v].a for v in uniq])[inv].reshape(e.shape)
        b = np.array([cache[v].b for v in uniq])[inv].reshape(e.shape)
        c = np.array([cache[v].c for v in uniq])[inv].reshape(e.shape)
        v = np.sqrt(np.abs(a + b * s + c * s * s))
        return phi(e) * phi(s / k) / v

    return TestFunction(f, name=f"u_{k}/v")


# ---------------------------------------------------------------------------
# reports

def make_report(surface: str, region, operation: str, value, terms=None, grid=None, tolerances=None,
                verdict=None) -> dict:
    return {"surface": surface, "region": [list(map(float, r)) for r in region] if region is not None else None,
            "operation": operation, "value": value, "terms": terms or {}, "grid": list(grid) if grid else None,
            "tolerances": tolerances or {}, "verdict": verdict}


def _fmt(obj):
    if isinstance(obj, dict):
        return {k: _fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.9g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _fmt(obj.tolist())
    return obj


def report_json(report: dict) -> str:
    return json.dumps(_fmt(report), indent=2)
