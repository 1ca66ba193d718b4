import numpy as np
import pytest
from hypothesis import given, strategies as st

from igabem.nurbs import (KnotVector, NurbsError, NurbsSurface, basis_matrix, elevate_order,
                          eval_basis, infinite_basis, insert_knots, quarter_circle_weights, refine)


@st.composite
def knot_vectors(draw):
    p = draw(st.integers(1, 4))
    inner = sorted(draw(st.lists(st.floats(0.05, 0.95), max_size=5)))
    # cap multiplicities at p
    kept = [u for i, u in enumerate(inner) if inner[:i].count(u) < p]
    return KnotVector(p, [0.0] * (p + 1) + kept + [1.0] * (p + 1))


def test_linear_midpoint():
    _, d = eval_basis(KnotVector(1, [0, 0, 1, 1]), 0.5, 0)
    np.testing.assert_allclose(d[0], [0.5, 0.5])


def test_bernstein_values():
    first, d = eval_basis(KnotVector(2, [0, 0, 0, 1, 1, 1]), 0.3, 1)
    assert first == 0
    np.testing.assert_allclose(d[0], [0.49, 0.42, 0.09], atol=1e-15)
    np.testing.assert_allclose(d[1], [-1.4, 0.8, 0.6], atol=1e-14)


@given(knot_vectors(), st.floats(0.0, 1.0))
def test_partition_of_unity(kv, xi):
    B = basis_matrix(kv, [xi], 2)
    assert abs(B[0].sum() - 1.0) < 1e-12
    assert abs(B[1].sum()) < 1e-9
    assert abs(B[2].sum()) < 1e-7


@given(knot_vectors())
def test_greville_count_and_order(kv):
    g = kv.greville()
    assert g.size == kv.n
    assert np.all(np.diff(g) >= -1e-15) and g[0] == 0.0 and g[-1] == 1.0


def test_parameter_outside_domain():
    with pytest.raises(NurbsError):
        basis_matrix(KnotVector(1, [0, 0, 1, 1]), [1.2])


def test_bad_knot_vectors():
    with pytest.raises(NurbsError):
        KnotVector(2, [0, 0, 1, 1])
    with pytest.raises(NurbsError):
        KnotVector(1, [0, 0, 0.6, 0.4, 1, 1])


def test_insert_two_knots_linear():
    rb = insert_knots(KnotVector(1, [0, 0, 1, 1]), [0.4, 0.6])
    assert rb.basis.n == 4
    np.testing.assert_allclose(rb.anchors, [0, 0.4, 0.6, 1])


def test_insert_nothing_is_identity():
    kv = KnotVector(2, [0, 0, 0, 0.5, 1, 1, 1])
    rb = insert_knots(kv, [])
    np.testing.assert_array_equal(rb.basis.knots, kv.knots)
    np.testing.assert_array_equal(rb.transfer, np.eye(kv.n))


def test_insert_beyond_multiplicity():
    with pytest.raises(NurbsError):
        insert_knots(KnotVector(1, [0, 0, 0.5, 1, 1]), [0.5, 0.5])


def test_insert_quadratic_preserves_curve():
    kv = KnotVector(2, [0, 0, 0, 1, 1, 1])
    P = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
    rb = insert_knots(kv, [0.5])
    assert rb.basis.n == 4
    x0 = basis_matrix(kv, [0.25])[0] @ P
    x1 = basis_matrix(rb.basis, [0.25])[0] @ rb.refine_points(P)
    np.testing.assert_allclose(x0, x1, atol=1e-12)


def test_elevate_linear_to_quadratic():
    rb = elevate_order(KnotVector(1, [0, 0, 1, 1]))
    np.testing.assert_array_equal(rb.basis.knots, [0, 0, 0, 1, 1, 1])
    assert rb.basis.n == 3


def test_elevated_line_reproduced():
    kv = KnotVector(1, [0, 0, 1, 1])
    P = np.array([[0.0, 1.0, 2.0], [3.0, -1.0, 0.5]])
    rb = elevate_order(kv, 2)
    xi = np.linspace(0, 1, 5)
    np.testing.assert_allclose(basis_matrix(rb.basis, xi)[0] @ rb.refine_points(P),
                               basis_matrix(kv, xi)[0] @ P, atol=1e-12)


@given(knot_vectors(), st.integers(0, 2), st.lists(st.floats(0.01, 0.99), max_size=3),
       st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_refinement_reproduces_geometry(kv, el, ins, xi):
    P = np.random.default_rng(kv.n).normal(size=(kv.n, 3))
    try:
        rb = refine(kv, el, ins)
    except NurbsError:
        return  # multiplicity overflow on a random draw
    np.testing.assert_allclose(basis_matrix(rb.basis, xi)[0] @ rb.refine_points(P),
                               basis_matrix(kv, xi)[0] @ P, atol=1e-12)


def _arc(R=5.0):
    kq = KnotVector(2, [0, 0, 0, 1, 1, 1])
    kl = KnotVector(1, [0, 0, 1, 1])
    P = np.array([[[R, 0, 0], [R, 0, 1]], [[R, R, 0], [R, R, 1]], [[0, R, 0], [0, R, 1]]], float)
    w = np.repeat(quarter_circle_weights()[:, None], 2, axis=1)
    return NurbsSurface(kq, kl, P, w)


def test_quarter_circle_exact():
    s = _arc()
    u = np.linspace(0, 1, 41)
    x = s(u, np.full_like(u, 0.3))
    np.testing.assert_allclose(x[:, 0] ** 2 + x[:, 1] ** 2, 25.0, rtol=0, atol=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_refined_surface_matches(u, v):
    s = _arc()
    fs = s.refined(refine(s.ku, 1, [0.3]), refine(s.kv, 1, [0.5]))
    np.testing.assert_allclose(fs([u], [v]), s([u], [v]), atol=1e-12)


def test_flat_patch_normal_and_jacobian():
    kl = KnotVector(1, [0, 0, 1, 1])
    s = NurbsSurface(kl, kl, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    d = s.derivatives(np.array([0.2, 0.7]), np.array([0.9, 0.1]))
    np.testing.assert_allclose(d.normal, [[0, 0, 1]] * 2)
    np.testing.assert_allclose(d.jacobian, 1.0)


def test_surface_derivatives_finite_difference():
    s = _arc()
    u, v, h = 0.37, 0.4, 1e-6
    d = s.derivatives([u], [v])
    np.testing.assert_allclose(d.xu[0], (s([u + h], [v]) - s([u - h], [v]))[0] / (2 * h), atol=1e-6)
    h = 1e-4
    np.testing.assert_allclose(d.xuu[0], (s([u + h], [v]) - 2 * s([u], [v]) + s([u - h], [v]))[0] / h**2,
                               atol=1e-5)


def test_infinite_basis_values():
    np.testing.assert_allclose(infinite_basis(0.0), (1, 0, -1, 1))
    np.testing.assert_allclose(infinite_basis(0.5), (0, 1, -4, 4))
    with pytest.raises(NurbsError):
        infinite_basis(1.0)


@given(st.floats(0.0, 0.999))
def test_infinite_basis_sums_to_one(eta):
    m1, m2, d1, d2 = infinite_basis(eta)
    assert abs(m1 + m2 - 1.0) < 1e-12 * max(1.0, abs(m1))
    assert abs(d1 + d2) < 1e-9 * max(1.0, d2)
