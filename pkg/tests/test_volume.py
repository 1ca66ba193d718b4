import numpy as np
import pytest

from igabem.geometry import Inclusion
from igabem.inclusion_field import InclusionGrid, Interp1D
from igabem.kernels import ElasticMaterial
from igabem.nurbs import KnotVector, NurbsSurface
from igabem.quadrature import QuadratureError
from igabem.volume import VolumeOptions, invert_inclusion, volume_block

LIN = KnotVector(1, [0, 0, 1, 1])
MAT = ElasticMaterial(10.0, 0.0)


def flat(z):
    return NurbsSurface(LIN, LIN, [[0, 0, z], [1, 0, z], [0, 1, z], [1, 1, z]])


def slab_grid(d=0.2, sigma="constant"):
    inc = Inclusion(flat(0.5 - d / 2), flat(0.5 + d / 2))
    return InclusionGrid(inc, (Interp1D(), Interp1D(), Interp1D()), sigma, ElasticMaterial(20.0, 0.0))


def test_invert_inclusion():
    g = slab_grid()
    np.testing.assert_allclose(invert_inclusion(g.inclusion, [0.25, 0.75, 0.55]), [0.25, 0.75, 0.75], atol=1e-12)
    assert invert_inclusion(g.inclusion, [0.5, 0.5, 3.0]) is None


@pytest.mark.parametrize("y", [(0.5, 0.5, 0.6), (0.0, 0.0, 0.4), (1.0, 0.5, 0.5)])
def test_option1_matches_option2(y):
    g = slab_grid(0.2)
    a = volume_block(g, MAT, y, VolumeOptions(option=1, pyramid_order=8))
    b = volume_block(g, MAT, y, VolumeOptions(option=2))
    assert np.abs(a - b).max() <= 1e-3 * np.abs(b).max()


def test_exclusion_radius_independence():
    g = slab_grid(0.2)
    y = (0.5, 0.5, 0.6)
    a = volume_block(g, MAT, y, VolumeOptions(option=2, radius=0.02))
    b = volume_block(g, MAT, y, VolumeOptions(option=2, radius=0.08))
    assert np.abs(a - b).max() <= 1e-4 * np.abs(b).max()


def test_far_field_inverse_square():
    g = slab_grid()
    norms = [np.linalg.norm(volume_block(g, MAT, (0.5, 0.5, 0.5 + 10 * 2**k), VolumeOptions()))
             for k in range(4)]
    ratios = np.array(norms[:-1]) / np.array(norms[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)
    assert abs(ratios[-1] - 4.0) < abs(ratios[0] - 4.0) + 1e-12


def test_constant_shapes_sum_to_whole():
    # constant sigma shapes partition the inclusion: their blocks add up to
    # the block of the linear family summed over nodes
    y = (0.3, 0.2, 1.4)
    a = volume_block(slab_grid(sigma="constant"), MAT, y, VolumeOptions()).sum(axis=-1)
    b = volume_block(slab_grid(sigma="linear"), MAT, y, VolumeOptions()).sum(axis=-1)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_invalid_option():
    with pytest.raises(QuadratureError):
        VolumeOptions(option=3)
