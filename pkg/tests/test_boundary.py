import numpy as np
import pytest

from igabem import models
from igabem.boundary import integrate_patch, locate_on_patch, surface_rule
from igabem.kernels import ElasticMaterial, kelvin_U
from igabem.model_io import build_model, parse_model

MAT = ElasticMaterial(10.0, 0.3)


@pytest.fixture(scope="module")
def cube():
    return build_model(parse_model(models.cube_patch_test()))


@pytest.mark.parametrize("y,expected", [((0.3, 0.6, 0.45), -np.eye(3)), ((1.8, 0.4, -0.7), np.zeros((3, 3)))])
def test_closed_surface_identity(cube, y, expected):
    total = sum(integrate_patch(p, MAT, np.array(y)).Tsum for p in cube.patches)
    np.testing.assert_allclose(total, expected, atol=1e-6)


def test_collocated_regularisation_kills_constants(cube):
    p = cube.patches[1]
    yp = np.array([0.3, 0.7])
    y = p.evaluate(yp[:1], yp[1:]).x[0]
    out = integrate_patch(p, MAT, y, yp)
    assert out.Tsum is None
    np.testing.assert_allclose(out.H.sum(axis=-1), 0.0, atol=1e-12)


def test_displacement_kernel_area(cube):
    # far away the U integral of a unit field tends to U(y, centre) * area
    p = cube.patches[0]
    y = np.array([0.5, 0.5, 200.0])
    out = integrate_patch(p, MAT, y, want_G=True)
    ref = kelvin_U(MAT, y, p.evaluate([0.5], [0.5]).x)[0]
    np.testing.assert_allclose(out.G.sum(axis=-1), ref, rtol=1e-4, atol=1e-12)


def test_locate_on_patch(cube):
    p = cube.patches[1]
    x = p.evaluate([0.25], [0.6]).x[0]
    np.testing.assert_allclose(locate_on_patch(p, x), [0.25, 0.6], atol=1e-10)
    assert locate_on_patch(p, x + 0.1 * p.evaluate([0.25], [0.6]).n[0]) is None


def test_rule_weights_cover_patch(cube):
    p = cube.patches[2]
    r = surface_rule(p, np.array([0.5, 0.5, 0.5]))
    assert abs(r.weights.sum() - 1.0) < 1e-12
    r = surface_rule(p, p.evaluate([0.2], [0.9]).x[0], (0.2, 0.9))
    assert abs(r.weights.sum() - 1.0) < 1e-12
