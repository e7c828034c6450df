"""Group law, left-invariant frame and horizontal lines of the Heisenberg group H^1.

Points use exponential coordinates (x, y, t) with the product

    (x, y, t) * (x', y', t') = (x + x', y + y', t + t' + y x' - x y')

The left-invariant frame is X = d/dx + y d/dt, Y = d/dy - x d/dt, T = d/dt, declared
orthonormal.  Tangent vectors are stored by their components in that frame and keep
their base point so that vectors at different points are never combined by accident.

Every scalar function here has an array twin (suffix ``_array``) acting on the last
axis of ``(..., 3)`` arrays; the heavier modules only use those.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BasePointMismatch, HeisenbergError

BASE_TOL = 1e-12


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    t: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.t])):
            raise ValueError(f"non-finite point {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.t], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "Point":
        x, y, t = (float(v) for v in np.asarray(arr, dtype=float).reshape(3))
        return cls(x, y, t)

    def close_to(self, other: "Point", tol: float = BASE_TOL) -> bool:
        return bool(np.max(np.abs(self.as_array() - other.as_array())) <= tol)


ORIGIN = Point(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FrameVector:
    """Tangent vector a X + b Y + c T at ``base``."""

    a: float
    b: float
    c: float
    base: Point = ORIGIN

    def __post_init__(self):
        if not np.all(np.isfinite([self.a, self.b, self.c])):
            raise ValueError(f"non-finite frame vector {self!r}")

    @property
    def components(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    @classmethod
    def from_components(cls, comps, base: Point = ORIGIN) -> "FrameVector":
        a, b, c = (float(v) for v in np.asarray(comps, dtype=float).reshape(3))
        return cls(a, b, c, base)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def _check_base(self, other: "FrameVector"):
        if not self.base.close_to(other.base):
            raise BasePointMismatch(f"{self.base} vs {other.base}")

    def __add__(self, other: "FrameVector") -> "FrameVector":
        self._check_base(other)
        return FrameVector.from_components(self.components + other.components, self.base)

    def __sub__(self, other: "FrameVector") -> "FrameVector":
        self._check_base(other)
        return FrameVector.from_components(self.components - other.components, self.base)

    def __neg__(self) -> "FrameVector":
        return FrameVector(-self.a, -self.b, -self.c, self.base)

    def scale(self, k: float) -> "FrameVector":
        return FrameVector.from_components(k * self.components, self.base)

    def allclose(self, other: "FrameVector", tol: float = 1e-12) -> bool:
        self._check_base(other)
        return bool(np.max(np.abs(self.components - other.components)) <= tol)


def frame_X(base: Point = ORIGIN) -> FrameVector:
    return FrameVector(1.0, 0.0, 0.0, base)


def frame_Y(base: Point = ORIGIN) -> FrameVector:
    return FrameVector(0.0, 1.0, 0.0, base)


def frame_T(base: Point = ORIGIN) -> FrameVector:
    return FrameVector(0.0, 0.0, 1.0, base)


# ---------------------------------------------------------------------------
# array kernels

def group_product_array(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    xq, yq, tq = q[..., 0], q[..., 1], q[..., 2]
    # Im(z conj(z')) with z = x + iy, z' = x' + iy'
    return np.stack([x + xq, y + yq, t + tq + y * xq - x * yq], axis=-1)


def group_inverse_array(p) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def to_frame_array(vecs, points) -> np.ndarray:
    """Coordinate components (v1, v2, v3) -> frame components at ``points``."""
    v = np.asarray(vecs, dtype=float)
    p = np.asarray(points, dtype=float)
    c = v[..., 2] - v[..., 0] * p[..., 1] + v[..., 1] * p[..., 0]
    return np.stack([v[..., 0], v[..., 1], c], axis=-1)


def to_euclidean_array(frame, points) -> np.ndarray:
    """Frame components -> coordinate components at ``points``."""
    f = np.asarray(frame, dtype=float)
    p = np.asarray(points, dtype=float)
    v3 = f[..., 2] + f[..., 0] * p[..., 1] - f[..., 1] * p[..., 0]
    return np.stack([f[..., 0], f[..., 1], v3], axis=-1)


def j_array(frame) -> np.ndarray:
    f = np.asarray(frame, dtype=float)
    return np.stack([-f[..., 1], f[..., 0], np.zeros_like(f[..., 0])], axis=-1)


def dot_array(u, v) -> np.ndarray:
    return np.sum(np.asarray(u) * np.asarray(v), axis=-1)


def cross_array(u, v) -> np.ndarray:
    """Cross product relative to the oriented orthonormal frame {X, Y, T}."""
    return np.cross(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


def horizontal_line_array(p0, A, B, s) -> np.ndarray:
    p0 = np.asarray(p0, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    s = np.asarray(s, dtype=float)
    x0, y0, t0 = p0[..., 0], p0[..., 1], p0[..., 2]
    return np.stack([x0 + A * s, y0 + B * s, t0 + (A * y0 - B * x0) * s], axis=-1)


# ---------------------------------------------------------------------------
# value-level API

def group_product(p: Point, q: Point) -> Point:
    return Point.from_array(group_product_array(p.as_array(), q.as_array()))


def group_inverse(p: Point) -> Point:
    return Point(-p.x, -p.y, -p.t)


def left_translation_differential(p: Point) -> np.ndarray:
    """Jacobian of q -> p * q in coordinates (constant in q)."""
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [p.y, -p.x, 1.0]])


def euclidean_to_frame(v: Sequence[float], base: Point) -> FrameVector:
    return FrameVector.from_components(to_frame_array(np.asarray(v, dtype=float), base.as_array()), base)


def frame_to_euclidean(v: FrameVector) -> np.ndarray:
    return to_euclidean_array(v.components, v.base.as_array())


def j_operator(v: FrameVector) -> FrameVector:
    return FrameVector(-v.b, v.a, 0.0, v.base)


def inner_product(v: FrameVector, w: FrameVector) -> float:
    v._check_base(w)
    return float(v.a * w.a + v.b * w.b + v.c * w.c)


def horizontal_projection(v: FrameVector) -> FrameVector:
    return FrameVector(v.a, v.b, 0.0, v.base)


def horizontal_line(p0: Point, A: float, B: float, s: float) -> Point:
    """Horizontal geodesic through ``p0`` with initial horizontal velocity A X + B Y."""
    return Point.from_array(horizontal_line_array(p0.as_array(), A, B, s))


def _as_samples(curve) -> np.ndarray:
    if isinstance(curve, np.ndarray):
        return np.asarray(curve, dtype=float).reshape(-1, 3)
    pts = [c.as_array() if isinstance(c, Point) else np.asarray(c, dtype=float) for c in curve]
    return np.asarray(pts, dtype=float).reshape(-1, 3)


def frame_tangents(samples, step: float) -> np.ndarray:
    """Second-order central-difference tangents at interior samples, in frame components."""
    pts = _as_samples(samples)
    if len(pts) < 3:
        raise HeisenbergError("need at least 3 samples")
    vel = (pts[2:] - pts[:-2]) / (2.0 * step)
    return to_frame_array(vel, pts[1:-1])


def horizontality_residual(curve, step: float = 1.0) -> float:
    """Largest T-component of the sampled tangent over interior samples."""
    return float(np.max(np.abs(frame_tangents(curve, step)[:, 2])))
