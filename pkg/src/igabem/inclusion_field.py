"""Fields inside an inclusion: grid, interpolation, local strains, initial stress.

Grid points form a tensor grid in (s, t, r); flat numbering is
``i + n_s * (j + n_t * k)``.  Displacements are interpolated per direction
either with Lagrange polynomials (up to cubic) or with a NURBS basis whose
Greville points are the grid points.  Initial stresses use piecewise
constant or piecewise linear shape functions on the same grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Inclusion, frame_from_point, geometric_derivatives
from .kernels import ElasticMaterial, initial_stress_matrix
from .nurbs import KnotVector, basis_matrix, rational
from .quadrature import Box


class FieldError(ValueError):
    """Inconsistent grid or interpolation specification."""


class Interp1D:
    """One-directional interpolation family on grid points in [0, 1].

    Parameters
    ----------
    family : {'lagrange', 'nurbs'}
    points : array_like, optional
        Lagrange nodes (1 to 4 points).  A single node means a constant.
    knots, degree, weights : optional
        NURBS basis; the grid points are its Greville abscissae.
    """

    def __init__(self, family: str = "lagrange", points=None, degree: int | None = None,
                 knots=None, weights=None):
        self.family = family
        if family == "lagrange":
            pts = np.asarray([0.0, 1.0] if points is None else points, dtype=float)
            if pts.size > 4:
                raise FieldError("Lagrange interpolation limited to order 3 (4 points)")
            if pts.size > 1 and np.any(np.diff(pts) <= 0):
                raise FieldError("Lagrange nodes must be strictly increasing")
            self.points = pts
        elif family == "nurbs":
            if knots is None:
                raise FieldError("NURBS interpolation needs a knot vector")
            self.kv = KnotVector(int(degree), knots)
            self.weights = np.ones(self.kv.n) if weights is None else np.asarray(weights, float)
            if self.weights.size != self.kv.n:
                raise FieldError("NURBS weights do not match the knot vector")
            self.points = self.kv.greville()
        else:
            raise FieldError(f"unknown interpolation family {family!r}")

    @property
    def n(self) -> int:
        return self.points.size

    def basis(self, x, nderiv: int = 1) -> np.ndarray:
        """Values and first derivatives, shape (nderiv+1, N, n)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.family == "nurbs":
            return rational(basis_matrix(self.kv, x, nderiv), self.weights)[: nderiv + 1]
        p = self.points
        n = p.size
        out = np.zeros((nderiv + 1, x.size, n))
        if n == 1:
            out[0] = 1.0
            return out
        for a in range(n):
            others = [b for b in range(n) if b != a]
            den = np.prod([p[a] - p[b] for b in others])
            out[0, :, a] = np.prod([x - p[b] for b in others], axis=0) / den
            if nderiv:
                d = np.zeros_like(x)
                for c in others:
                    d += np.prod([x - p[b] for b in others if b != c], axis=0) if len(others) > 1 else 1.0
                out[1, :, a] = d / den
        return out


def _hat_basis(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = nodes.size
    out = np.zeros((x.size, n))
    if n == 1:
        out[:] = 1.0
        return out
    k = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, n - 2)
    f = (x - nodes[k]) / (nodes[k + 1] - nodes[k])
    rows = np.arange(x.size)
    out[rows, k] = 1.0 - f
    out[rows, k + 1] += f
    return out


def _owner_basis(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Piecewise-constant indicator; a midpoint belongs to the lower-index cell."""
    n = nodes.size
    out = np.zeros((x.size, n))
    if n == 1:
        out[:] = 1.0
        return out
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    k = np.searchsorted(mids, x, side="left")
    out[np.arange(x.size), k] = 1.0
    return out


class InclusionGrid:
    """Grid of field points inside one inclusion with its interpolation rules."""

    def __init__(self, inclusion: Inclusion, interp: tuple, sigma: str = "constant",
                 material: ElasticMaterial | None = None, name: str = ""):
        if len(interp) != 3:
            raise FieldError("need one interpolation family per direction (s, t, r)")
        if sigma not in ("constant", "linear"):
            raise FieldError("sigma family must be 'constant' or 'linear'")
        self.inclusion, self.interp, self.sigma = inclusion, tuple(interp), sigma
        self.material, self.name = material, name
        self.shape = tuple(f.n for f in self.interp)
        gs, gt, gr = (f.points for f in self.interp)
        S, T, Rr = np.meshgrid(gs, gt, gr, indexing="ij")
        # flat index i + n_s*(j + n_t*k)
        self.params = np.column_stack([S.transpose(2, 1, 0).ravel(),
                                       T.transpose(2, 1, 0).ravel(),
                                       Rr.transpose(2, 1, 0).ravel()])
        self.points = inclusion(*self.params.T)
        self._A = None

    @property
    def n(self) -> int:
        return self.params.shape[0]

    # -- displacement interpolation -------------------------------------
    def u_basis(self, s, t, r):
        """Tensor basis M and its s, t, r derivatives, each (N, n)."""
        bs = self.interp[0].basis(s, 1)
        bt = self.interp[1].basis(t, 1)
        br = self.interp[2].basis(r, 1)

        def tp(a, b, c):
            return np.einsum("ni,nj,nk->nkji", bs[a], bt[b], br[c]).reshape(bs.shape[1], -1)

        return tp(0, 0, 0), tp(1, 0, 0), tp(0, 1, 0), tp(0, 0, 1)

    def conversion(self) -> tuple[np.ndarray, np.ndarray]:
        """Matrix A of basis values at grid points and its inverse."""
        if self._A is None:
            A = self.u_basis(*self.params.T)[0]
            if np.linalg.cond(A) > 1e12:
                raise FieldError("singular interpolation matrix: bad point/basis pairing")
            Ainv = np.linalg.inv(A)
            A[np.abs(A) < 1e-15] = 0.0
            self._A = (A, Ainv)
        return self._A

    # -- initial-stress shape functions ---------------------------------
    def sigma_basis(self, s, t, r) -> np.ndarray:
        """Shape functions of the initial stress, (N, n)."""
        f = _owner_basis if self.sigma == "constant" else _hat_basis
        x = [np.atleast_1d(np.asarray(a, float)) for a in (s, t, r)]
        b = [f(self.interp[d].points, x[d]) for d in range(3)]
        return np.einsum("ni,nj,nk->nkji", *b).reshape(x[0].size, -1)

    def interpolate_sigma(self, sigma_nodes: np.ndarray, s, t, r) -> np.ndarray:
        return self.sigma_basis(s, t, r) @ np.asarray(sigma_nodes).reshape(self.n, 6)

    def sigma_cells(self) -> list[Box]:
        """Integration regions: supports of the shape functions (cells)."""
        edges = []
        for f in self.interp:
            p = f.points
            if p.size == 1:
                e = np.array([0.0, 1.0])
            elif self.sigma == "constant":
                e = np.concatenate([[0.0], 0.5 * (p[1:] + p[:-1]), [1.0]])
            else:
                e = p.copy()
                if e[0] > 0:
                    e = np.concatenate([[0.0], e])
                if e[-1] < 1:
                    e = np.concatenate([e, [1.0]])
            edges.append(e)
        return [Box((a0, b0, c0), (a1, b1, c1))
                for a0, a1 in zip(edges[0][:-1], edges[0][1:])
                for b0, b1 in zip(edges[1][:-1], edges[1][1:])
                for c0, c1 in zip(edges[2][:-1], edges[2][1:])]

    # -- strains ---------------------------------------------------------
    def node_rotations(self) -> np.ndarray:
        f = frame_from_point(self.inclusion.evaluate(*self.params.T))
        return f.R

    def strain_operator(self, s, t, r) -> np.ndarray:
        """Matrix mapping global nodal displacements (3n, node-major) to local strains.

        Nodal displacements are first resolved in the frame of their own
        node, converted to interpolation coefficients, differentiated in the
        frame of the evaluation point and corrected by the curvature term.
        Returns (N, 6, 3n); rows 5 and 6 (transverse shears) are zero.
        """
        s, t, r = (np.atleast_1d(np.asarray(a, float)) for a in (s, t, r))
        p = self.inclusion.evaluate(s, t, r)
        f = frame_from_point(p)
        ds_dx, ds_dy, dt_dx, dt_dy, dr_dz = geometric_derivatives(f)
        M, Ms, Mt, Mr = self.u_basis(s, t, r)
        _, Ainv = self.conversion()
        Dx = (Ms * ds_dx[:, None] + Mt * dt_dx[:, None]) @ Ainv
        Dy = (Ms * ds_dy[:, None] + Mt * dt_dy[:, None]) @ Ainv
        Dz = (Mr * dr_dz[:, None]) @ Ainv
        Mc = M @ Ainv
        kx, ky = f.kappa_x_signed[:, None], f.kappa_y_signed[:, None]
        N, n = M.shape
        # operator on local nodal components, laid out (N, 6, n, 3)
        B = np.zeros((N, 6, n, 3))
        B[:, 0, :, 0] = Dx
        B[:, 0, :, 2] = -kx * Mc
        B[:, 1, :, 1] = Dy
        B[:, 1, :, 2] = -ky * Mc
        B[:, 2, :, 2] = Dz
        B[:, 3, :, 0] = Dy
        B[:, 3, :, 1] = Dx
        # local nodal component c of node j is R_j[:, c] . u_j
        Rn = self.node_rotations()
        out = np.einsum("pajc,jdc->pajd", B, Rn)
        return out.reshape(N, 6, 3 * n)

    def grid_strain_operator(self) -> np.ndarray:
        """Strain operator at the grid points, (6n, 3n)."""
        return self.strain_operator(*self.params.T).reshape(6 * self.n, 3 * self.n)

    def local_strains(self, u_nodes: np.ndarray, s, t, r) -> np.ndarray:
        B = self.strain_operator(s, t, r)
        return B @ np.asarray(u_nodes, float).ravel()


def local_strains(grid: InclusionGrid, u_nodes, s, t, r) -> np.ndarray:
    return grid.local_strains(u_nodes, s, t, r)


def build_nurbs_conversion(grid: InclusionGrid) -> tuple[np.ndarray, np.ndarray]:
    return grid.conversion()


def update_initial_stress(strains: np.ndarray, Dp: np.ndarray) -> np.ndarray:
    """Local initial stresses ``D' eps'`` for strains of shape (..., 6)."""
    return np.einsum("ab,...b->...a", Dp, strains)


def initial_stress_operator(grid: InclusionGrid, mat_domain: ElasticMaterial) -> np.ndarray:
    """Block-diagonal D' for all grid points of one inclusion."""
    if grid.material is None:
        raise FieldError("inclusion grid has no material")
    Dp = initial_stress_matrix(mat_domain, grid.material)
    return np.kron(np.eye(grid.n), Dp)
