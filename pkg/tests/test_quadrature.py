import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from igabem.geometry import Inclusion
from igabem.nurbs import KnotVector, NurbsSurface
from igabem.quadrature import (Box, QuadratureError, box_rule, decay_exponent, gauss_points,
                               integrate_regular, near_singular_subregions, pyramid_map, pyramid_rule,
                               regular_rule, select_order, subregion_rule, tensor_rule)
from igabem.verification import EXPONENT_TOL, jacobian_exponents

LIN = KnotVector(1, [0, 0, 1, 1])


def slab(z0=0.4, z1=0.6, size=1.0):
    def flat(z):
        return NurbsSurface(LIN, LIN, [[0, 0, z], [size, 0, z], [0, size, z], [size, size, z]])
    return Inclusion(flat(z0), flat(z1))


def test_gauss_order_two():
    x, w = gauss_points(2)
    np.testing.assert_allclose(x, [-1 / math.sqrt(3), 1 / math.sqrt(3)])
    np.testing.assert_allclose(w, [1, 1])


def test_gauss_exactness():
    x, w = gauss_points(3)
    assert abs(w @ x**4 - 0.4) < 1e-15
    with pytest.raises(QuadratureError):
        gauss_points(0)


def test_order_selection():
    assert select_order(10.0) == 4
    assert select_order(4.5) == 4
    assert select_order(0.0) == 16
    assert select_order(1e-3) == 16
    assert 4 < select_order(1.0) < 16


def test_constant_integrand_volume():
    inc = slab(0.4, 0.6, 2.0)
    v = integrate_regular(inc, Box((0, 0, 0), (1, 1, 1)), np.array([10.0, 0, 0]),
                          lambda p: np.ones(len(p)))
    assert abs(v - 4.0 * 0.2) < 1e-13


def test_far_kernel_against_brute_force():
    inc = slab()
    y = np.array([0.5, 0.5, 3.0])
    box = Box((0, 0, 0), (1, 1, 1))

    def f(p):
        return 1.0 / np.sum((inc(*p.T) - y) ** 2, axis=1)

    ref = box_rule(box, (40, 40, 40))
    ref = np.sum(ref.weights * inc.evaluate(*ref.points.T).J * f(ref.points))
    assert abs(integrate_regular(inc, box, y, f) / ref - 1) < 1e-8


def test_near_source_subdivides():
    inc = slab()
    box = Box((0, 0, 0), (1, 1, 1))
    assert len(regular_rule(inc, box, [0.5, 0.5, 0.65])) > len(regular_rule(inc, box, [0.5, 0.5, 5.0]))
    with pytest.raises(QuadratureError):
        regular_rule(inc, box, [0.5, 0.5, 0.5])


@given(st.floats(0.7, 3.0), st.floats(-0.5, 1.5))
def test_additivity(h, x0):
    inc = slab()
    y = np.array([x0, 0.3, 0.6 + h])
    box = Box((0, 0, 0), (1, 1, 1))

    def f(p):
        return 1.0 / np.sum((inc(*p.T) - y) ** 2, axis=1)

    whole = integrate_regular(inc, box, y, f)
    parts = sum(integrate_regular(inc, b, y, f) for b in box.bisect([0, 1, 2]))
    assert abs(parts / whole - 1) < 1e-9


def test_box_split_and_invalid():
    b = Box((0, 0, 0), (1, 1, 1))
    assert len(b.split((0.5, 0.5, 1.0))) == 4
    assert len(b.split((0.5, 0.5, 0.5))) == 8
    assert sum(c.volume for c in b.split((0.2, 0.7, 0.4))) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(QuadratureError):
        Box((0.5, 0, 0), (0.5, 1, 1))


def test_subregion_control_points():
    sub1, sub2 = near_singular_subregions(0.2, 0.2, "arc")
    inner = sub1.control[:, 1]
    np.testing.assert_allclose(inner[0], [1 - math.cos(math.pi / 4) * 0.2] * 2)
    assert round(inner[0, 0], 4) == 0.8586
    np.testing.assert_allclose(inner[2], [1.0, 0.8])
    np.testing.assert_allclose(sub1.control[:, 0], [[0, 0], [0.5, 0], [1, 0]])
    assert round(sub1.weights[1, 1], 3) == 0.924
    np.testing.assert_allclose(sub2.control[2, 1], inner[0])


def test_arc_inner_edge_is_circle():
    sub = near_singular_subregions(0.3, 0.3, "arc")[0]
    xi = np.linspace(0, 1, 21)
    st_, _ = sub.map(xi, np.ones_like(xi))
    np.testing.assert_allclose(np.linalg.norm(st_ - 1.0, axis=1), 0.3, atol=1e-14)


def test_box_shape_corner():
    sub1, sub2 = near_singular_subregions(0.2, 0.3, "box")
    np.testing.assert_allclose(sub1.control[0, 1], [0.8, 0.7])
    np.testing.assert_allclose(sub2.control[0, 1], [0.8, 1.0])
    assert np.all(sub1.weights == 1.0)


def test_exclusion_radius_too_large():
    with pytest.raises(QuadratureError):
        near_singular_subregions(1.2, 0.1)


@pytest.mark.parametrize("R1,R2", [(0.2, 0.2), (0.1, 0.35)])
def test_subregions_partition_footprint(R1, R2):
    """Smooth integrand: subregions plus the quarter-ellipse exclusion give the unit square."""
    def f(s, t):
        return np.exp(s) * np.cos(t)

    x, w = gauss_points(40)
    x, w = 0.5 * (x + 1), 0.5 * w
    X, E = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w).ravel()
    total = 0.0
    for sub in near_singular_subregions(R1, R2, "arc"):
        st_, J = sub.map(X.ravel(), E.ravel())
        total += np.sum(W * np.abs(J) * f(st_[:, 0], st_[:, 1]))
    # exclusion: (1 - R1 rho cos a, 1 - R2 rho sin a), a in [0, pi/2]
    rho, a = X.ravel(), 0.5 * np.pi * E.ravel()
    s, t = 1 - R1 * rho * np.cos(a), 1 - R2 * rho * np.sin(a)
    total += np.sum(W * 0.5 * np.pi * R1 * R2 * rho * f(s, t))
    exact = (math.e - 1) * math.sin(1.0)
    assert abs(total - exact) < 1e-9


def test_subregion_rule_area():
    u, w = subregion_rule(near_singular_subregions(0.1, 0.1)[0], 0.1, 0.2)
    u2, w2 = subregion_rule(near_singular_subregions(0.1, 0.1)[1], 0.1, 0.2)
    assert abs(w.sum() + w2.sum() - (1 - math.pi * 0.01 / 4)) < 1e-10
    assert u.min() >= 0 and u.max() <= 1


def test_jacobian_exponents():
    e = jacobian_exponents()
    assert abs(e["tapered"] - 1.0) <= EXPONENT_TOL
    assert abs(e["pyramid"] - 2.0) <= EXPONENT_TOL


def test_pyramid_rule_volume():
    u, w = pyramid_rule(0.3, 0.2, 1, 3)
    assert abs(w.sum() - 0.06) < 1e-14
    u, w = pyramid_rule(0.3, 0.2, 0, 3)
    assert abs(w.sum() - 0.06) < 1e-14


def _face_oracle(h, a, b, n=60):
    """int over [0,a]x[0,b] of h / (h^2 + u^2 + v^2)."""
    x, w = gauss_points(n)
    u, wu = 0.5 * a * (x + 1), 0.5 * a * w
    v, wv = 0.5 * b * (x + 1), 0.5 * b * w
    U, V = np.meshgrid(u, v, indexing="ij")
    return float(np.sum(np.outer(wu, wv) * h / (h * h + U**2 + V**2)))


def test_pyramid_inverse_square_against_solid_angle():
    # box [0.5,1]^2 x [0,1] seen from its corner (1, 1, 1)
    u, w = pyramid_rule(0.5, 0.5, 1, 12)
    apex = np.array([1.0, 1.0, 1.0])
    num = np.sum(w / np.sum((u - apex) ** 2, axis=1))
    ref = 2 * _face_oracle(0.5, 0.5, 1.0) + _face_oracle(1.0, 0.5, 0.5)
    assert abs(num / ref - 1) < 1e-6


def test_pyramid_map_degenerate():
    face = np.zeros((4, 3))
    with pytest.raises(QuadratureError):
        pyramid_map(face, np.ones(3), np.array([[0.3, 0.3, 0.2]]))


def test_decay_exponent_of_power_law():
    d = np.geomspace(1e-4, 0.1, 20)
    assert abs(decay_exponent(d, 3 * d**1.5) - 1.5) < 1e-12


def test_tensor_rule_weights():
    X, W = tensor_rule((2, 3, 4))
    assert X.shape == (24, 3) and abs(W.sum() - 1) < 1e-15
