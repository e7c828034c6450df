import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenberg_surfaces.core import (
    FrameVector, Point, ORIGIN, euclidean_to_frame, frame_T, frame_to_euclidean, frame_X, frame_Y,
    group_inverse, group_product, horizontal_line, horizontal_projection, horizontality_residual,
    inner_product, j_operator, left_translation_differential,
)
from heisenberg_surfaces.errors import BasePointMismatch, HeisenbergError

coord = st.floats(-10, 10, allow_nan=False)
points = st.builds(Point, coord, coord, coord)
comps = st.tuples(coord, coord, coord)


def test_product_identity_element():
    assert group_product(ORIGIN, Point(1, 2, 3)).close_to(Point(1, 2, 3))


def test_product_hand_expansion():
    # z = 1, z' = i: Im(z conj(z')) = Im(-i) = -1
    assert group_product(Point(1, 0, 0), Point(0, 1, 0)).close_to(Point(1, 1, -1))


@given(points, points, points)
def test_product_associative(p, q, r):
    lhs = group_product(group_product(p, q), r).as_array()
    rhs = group_product(p, group_product(q, r)).as_array()
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(lhs).max()))


@given(points)
def test_identity_and_inverse(p):
    assert group_product(p, ORIGIN).close_to(p)
    assert group_product(ORIGIN, p).close_to(p)
    assert group_product(p, group_inverse(p)).close_to(ORIGIN, 1e-12)


@given(points, points)
def test_frame_is_left_invariant(p, q):
    # dL_p maps the frame at q to the frame at p*q
    dL = left_translation_differential(p)
    pq = group_product(p, q)
    for comp in np.eye(3):
        at_q = frame_to_euclidean(FrameVector.from_components(comp, q))
        moved = euclidean_to_frame(dL @ at_q, pq)
        assert np.allclose(moved.components, comp, atol=1e-10)


def test_euclidean_to_frame_examples():
    assert euclidean_to_frame((1, 0, 0), ORIGIN).allclose(frame_X())
    base = Point(3.0, -2.0, 7.0)
    assert euclidean_to_frame((0, 0, 1), base).allclose(frame_T(base))
    assert np.allclose(euclidean_to_frame((1, 0, 0), Point(0, 5, 0)).components, (1, 0, -5))


@given(comps, comps, points, coord)
def test_euclidean_to_frame_linear_and_invertible(v, w, base, k):
    v, w = np.array(v), np.array(w)
    lhs = euclidean_to_frame(v + k * w, base).components
    rhs = euclidean_to_frame(v, base).components + k * euclidean_to_frame(w, base).components
    assert np.allclose(lhs, rhs, atol=1e-9)
    back = frame_to_euclidean(euclidean_to_frame(v, base))
    assert np.allclose(back, v, atol=1e-12 * (1 + np.abs(base.as_array()).max() ** 2))


def test_j_operator_examples():
    assert j_operator(frame_X()).allclose(frame_Y())
    assert j_operator(frame_Y()).allclose(frame_X().scale(-1))
    assert j_operator(frame_T()).allclose(FrameVector(0, 0, 0))


@given(comps, comps)
def test_j_skew_and_norm(u, v):
    U, V = FrameVector(*u), FrameVector(*v)
    assert abs(inner_product(j_operator(U), V) + inner_product(U, j_operator(V))) <= 1e-12 * (1 + U.norm() * V.norm())
    h = horizontal_projection(U)
    assert abs(j_operator(h).norm() - h.norm()) <= 1e-12 * (1 + h.norm())
    assert j_operator(j_operator(h)).allclose(h.scale(-1))


def test_inner_product_examples():
    assert inner_product(frame_X(), frame_Y()) == 0.0
    assert inner_product(FrameVector(1, 2, 3), FrameVector(1, 2, 3)) == 14.0


def test_inner_product_rejects_mismatched_bases():
    with pytest.raises(BasePointMismatch):
        inner_product(frame_X(ORIGIN), frame_X(Point(1, 0, 0)))
    with pytest.raises(BasePointMismatch):
        frame_X(ORIGIN) + frame_Y(Point(0, 0, 1))


@given(comps)
def test_horizontal_projection(v):
    V = FrameVector(*v)
    assert horizontal_projection(frame_T()).allclose(FrameVector(0, 0, 0))
    assert horizontal_projection(frame_X() + frame_T()).allclose(frame_X())
    assert horizontal_projection(horizontal_projection(V)).allclose(horizontal_projection(V))


def test_horizontal_line_examples():
    p0 = Point(0.3, -1.2, 4.0)
    assert horizontal_line(p0, 0.6, 0.8, 0.0).close_to(p0)
    assert horizontal_line(ORIGIN, 1, 0, 2).close_to(Point(2, 0, 0))
    assert horizontal_line(Point(0, 1, 0), 1, 0, 2).close_to(Point(2, 1, 2))


@given(points, st.floats(-2, 2), st.floats(-2, 2))
def test_horizontal_line_is_horizontal_and_affine(p0, A, B):
    s = np.linspace(-1, 1, 41)
    pts = np.array([horizontal_line(p0, A, B, si).as_array() for si in s])
    assert horizontality_residual(pts, s[1] - s[0]) <= 1e-10 * (1 + np.abs(pts).max() ** 2)
    assert np.max(np.abs(np.diff(pts, 2, axis=0))) <= 1e-10 * (1 + np.abs(pts).max())


def test_horizontality_residual_vertical_curves():
    s = np.linspace(0, 1, 101)
    axis = np.stack([0 * s, 0 * s, s], axis=1)
    assert horizontality_residual(axis, s[1] - s[0]) == pytest.approx(1.0, abs=1e-12)
    diag = np.stack([s, 0 * s, s], axis=1)
    assert horizontality_residual(diag, s[1] - s[0]) == pytest.approx(1.0, abs=1e-12)


def test_horizontality_residual_needs_three_samples():
    with pytest.raises(HeisenbergError):
        horizontality_residual(np.zeros((2, 3)))


def test_points_reject_non_finite():
    with pytest.raises(ValueError):
        Point(np.nan, 0, 0)
