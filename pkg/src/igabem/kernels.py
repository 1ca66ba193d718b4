"""Kelvin fundamental solutions of 3-D isotropic elastostatics.

Index convention: the first index of every kernel is the direction of the
unit point force at the source ``y``; ``r = x - y`` points from the source
to the field point.  All functions are vectorised over field points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Voigt component order (engineering shears)
VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2))


class KernelError(ValueError):
    """Coincident source and field points or invalid input."""


@dataclass(frozen=True)
class ElasticMaterial:
    E: float
    nu: float

    def __post_init__(self):
        if not self.E > 0:
            raise KernelError("Young's modulus must be positive")
        if not -1.0 < self.nu < 0.5:
            raise KernelError("Poisson's ratio must lie in (-1, 0.5)")

    @property
    def G(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def C(self) -> float:
        return 1.0 / (16.0 * np.pi * self.G * (1.0 - self.nu))

    @property
    def C3(self) -> float:
        return 1.0 - 2.0 * self.nu

    C4 = 3.0


def _geometry(y, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r < 1e-14):
        raise KernelError("source and field point coincide (r < 1e-14)")
    return d / r[..., None], r


def kelvin_U(mat: ElasticMaterial, y, x) -> np.ndarray:
    """Displacement kernel, shape (N, 3, 3)."""
    dr, r = _geometry(y, x)
    c2 = 3.0 - 4.0 * mat.nu
    U = c2 * np.eye(3) + dr[..., :, None] * dr[..., None, :]
    return (mat.C / r)[..., None, None] * U


def kelvin_T(mat: ElasticMaterial, y, x, n) -> np.ndarray:
    """Traction kernel for the outward unit normal ``n`` at ``x``, shape (N, 3, 3)."""
    dr, r = _geometry(y, x)
    n = np.broadcast_to(np.asarray(n, dtype=float), dr.shape)
    c3 = mat.C3
    drdn = np.einsum("...i,...i->...", dr, n)
    rr = dr[..., :, None] * dr[..., None, :]
    rn = dr[..., :, None] * n[..., None, :]
    T = drdn[..., None, None] * (c3 * np.eye(3) + 3.0 * rr) - c3 * (rn - np.swapaxes(rn, -1, -2))
    return (-1.0 / (8.0 * np.pi * (1.0 - mat.nu) * r**2))[..., None, None] * T


def kernel_E_tilde(mat: ElasticMaterial, dr: np.ndarray) -> np.ndarray:
    """Bounded part of the strain kernel, ``E = E_tilde / r**2``, shape (N, 3, 3, 3)."""
    d = np.eye(3)
    t1 = mat.C3 * (np.einsum("...k,ij->...ijk", dr, d) + np.einsum("...j,ik->...ijk", dr, d))
    t2 = np.einsum("...i,jk->...ijk", dr, d)
    t3 = mat.C4 * np.einsum("...i,...j,...k->...ijk", dr, dr, dr)
    return -mat.C * (t1 - t2 + t3)


def kernel_E(mat: ElasticMaterial, y, x) -> np.ndarray:
    """Strain kernel E_ijk (i source direction, jk strain), shape (N, 3, 3, 3)."""
    dr, r = _geometry(y, x)
    return kernel_E_tilde(mat, dr) / (r**2)[..., None, None, None]


def voigt_pack(E: np.ndarray) -> np.ndarray:
    """Contract the strain indices into engineering Voigt columns, (..., 3, 6)."""
    E = np.asarray(E)
    cols = [E[..., j, k] if j == k else E[..., j, k] + E[..., k, j] for j, k in VOIGT]
    return np.stack(cols, axis=-1)


def voigt_to_tensor(s) -> np.ndarray:
    """Voigt stress vector(s) to symmetric 3x3 tensor(s)."""
    s = np.asarray(s, dtype=float)
    T = np.empty(s.shape[:-1] + (3, 3))
    for c, (j, k) in enumerate(VOIGT):
        T[..., j, k] = s[..., c]
        T[..., k, j] = s[..., c]
    return T


def rotate_E_local(E: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Express the strain indices of E in the frame with columns of ``R``.

    ``E'_i = R^T E_i R`` for each source direction ``i``; ``R`` may be a single
    matrix or one per point.
    """
    R = np.asarray(R, dtype=float)
    RtR = np.einsum("...ki,...kj->...ij", R, R)
    if not np.allclose(RtR, np.eye(3), atol=1e-10):
        raise KernelError("rotation matrix is not orthogonal")
    return np.einsum("...aj,...iab,...bk->...ijk", R, E, R)


def elasticity_matrix(mat: ElasticMaterial) -> np.ndarray:
    """Isotropic 6x6 Hooke matrix for engineering-shear Voigt vectors."""
    E, nu = mat.E, mat.nu
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    G = mat.G
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] = lam + 2 * G
    D[np.arange(3, 6), np.arange(3, 6)] = G
    return D


def initial_stress_matrix(mat_domain: ElasticMaterial, mat_incl: ElasticMaterial) -> np.ndarray:
    """``D' = D - D_incl``, mapping strain to the fictitious initial stress."""
    return elasticity_matrix(mat_domain) - elasticity_matrix(mat_incl)
