"""Boundary patches, inclusion volumes and local coordinate frames.

A finite patch is a NURBS surface.  An infinite patch is a NURBS curve
(the finite edge) swept toward infinity with the decay functions of
:func:`igabem.nurbs.infinite_basis`; displacements are constant along the
unbounded direction (plane strain).

An inclusion maps the unit cube (s, t, r) to space, either between two
bounding surfaces or by offsetting one surface along its normal by a
constant thickness ``d`` ("thin mode").
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nurbs import (
    KnotVector,
    NurbsError,
    NurbsSurface,
    RefinedBasis,
    basis_matrix,
    infinite_basis,
    rational,
    refine,
    tensor_rational_basis,
)

#: parameter beyond which an infinite patch is treated as the pole
ETA_POLE = 1.0 - 1e-6


class GeometryError(ValueError):
    """Degenerate geometry or parametrization."""


@dataclass(frozen=True)
class SurfaceEval:
    x: np.ndarray
    xu: np.ndarray
    xv: np.ndarray
    n: np.ndarray
    J: np.ndarray


def _unit_normal(xu, xv, flip):
    nr = np.cross(xu, xv)
    J = np.linalg.norm(nr, axis=-1)
    if np.any(J < 1e-14):
        raise GeometryError("degenerate surface: Jacobian below 1e-14")
    n = nr / J[:, None]
    return (-n if flip else n), J


class Patch:
    """Finite boundary patch with its own refined unknown-field basis.

    Parameters
    ----------
    surface : NurbsSurface
        Exact geometry.
    elevate, insert_u, insert_v :
        Refinement directives for the unknown field: order elevation (an int
        for both directions or a (u, v) pair), then knot insertion per
        direction.
    flip : bool
        Reverse the normal so that it points out of the domain.
    """

    kind = "finite"

    def __init__(self, surface: NurbsSurface, elevate: int = 0, insert_u=(), insert_v=(),
                 flip: bool = False, name: str = ""):
        self.surface = surface
        self.flip = bool(flip)
        self.name = name
        eu, ev = (elevate, elevate) if np.isscalar(elevate) else elevate
        self.ru: RefinedBasis = refine(surface.ku, int(eu), insert_u)
        self.rv: RefinedBasis = refine(surface.kv, int(ev), insert_v)
        self.field_surface = surface.refined(self.ru, self.rv)

    @property
    def n_field(self) -> int:
        return self.ru.basis.n * self.rv.basis.n

    def evaluate(self, u, v) -> SurfaceEval:
        d = self.surface.derivatives(u, v)
        n, J = _unit_normal(d.xu, d.xv, self.flip)
        return SurfaceEval(d.x, d.xu, d.xv, n, J)

    def field_basis(self, u, v) -> np.ndarray:
        fs = self.field_surface
        return tensor_rational_basis(fs.ku, fs.kv, fs.weights, u, v, 0)[0]

    def anchors(self) -> np.ndarray:
        """Parameter pairs of the collocation anchors, flat order ``i + n_u*j``."""
        gu, gv = self.ru.anchors, self.rv.anchors
        U, V = np.meshgrid(gu, gv)
        return np.column_stack([U.ravel(), V.ravel()])

    def anchor_points(self) -> np.ndarray:
        a = self.anchors()
        return self.surface(a[:, 0], a[:, 1])

    def breaks(self):
        return self.ru.basis.breaks, self.rv.basis.breaks


class InfinitePatch:
    """Patch extending to infinity in the eta direction.

    ``x(xi, eta) = sum_i R_i(xi) [M1(eta) p1_i + M2(eta) p2_i]`` with ``p1``
    the finite-edge control points and ``p2`` the decay-reference row.
    """

    kind = "infinite"

    def __init__(self, ku: KnotVector, p1, p2, weights=None, elevate: int = 0,
                 insert_u=(), flip: bool = False, name: str = ""):
        self.ku = ku
        self.p1 = np.asarray(p1, dtype=float)
        self.p2 = np.asarray(p2, dtype=float)
        if self.p1.shape != (ku.n, 3) or self.p2.shape != (ku.n, 3):
            raise GeometryError("infinite patch rows must have shape (n, 3)")
        self.weights = np.ones(ku.n) if weights is None else np.asarray(weights, dtype=float)
        if np.any(self.weights <= 0):
            raise GeometryError("weights must be positive")
        self.flip = bool(flip)
        self.name = name
        self.ru: RefinedBasis = refine(ku, elevate, insert_u)
        w4 = np.column_stack([self.p1 * self.weights[:, None], self.weights])
        self.field_weights = (self.ru.transfer @ w4)[:, 3]

    @property
    def n_field(self) -> int:
        return self.ru.basis.n

    def _curve_basis(self, u, nd=1):
        return rational(basis_matrix(self.ku, u, nd), self.weights)

    def evaluate(self, u, v) -> SurfaceEval:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        u, v = np.broadcast_arrays(u, v)
        if np.any(v > ETA_POLE):
            raise GeometryError("infinite patch evaluated too close to the pole eta = 1")
        R = self._curve_basis(u)
        m1, m2, dm1, dm2 = infinite_basis(v)
        c1 = R[0] @ self.p1
        c2 = R[0] @ self.p2
        x = m1[:, None] * c1 + m2[:, None] * c2
        xu = m1[:, None] * (R[1] @ self.p1) + m2[:, None] * (R[1] @ self.p2)
        xv = dm1[:, None] * c1 + dm2[:, None] * c2
        n, J = _unit_normal(xu, xv, self.flip)
        return SurfaceEval(x, xu, xv, n, J)

    def field_basis(self, u, v) -> np.ndarray:
        return rational(basis_matrix(self.ru.basis, u, 0), self.field_weights)[0]

    def anchors(self) -> np.ndarray:
        g = self.ru.anchors
        return np.column_stack([g, np.zeros_like(g)])

    def anchor_points(self) -> np.ndarray:
        a = self.anchors()
        return self.evaluate(a[:, 0], a[:, 1]).x

    def breaks(self):
        return self.ru.basis.breaks, np.array([0.0, 1.0])


def map_infinite_patch(p: InfinitePatch, xi, eta) -> tuple:
    """Point, tangents, unit normal and Jacobian of an infinite patch."""
    e = p.evaluate(xi, eta)
    return e.x, e.xu, e.xv, e.n, e.J


# --------------------------------------------------------------------------
# inclusions


@dataclass(frozen=True)
class InclusionPoint:
    x: np.ndarray
    Vs: np.ndarray
    Vt: np.ndarray
    Vr: np.ndarray
    Vss: np.ndarray
    Vtt: np.ndarray
    J: np.ndarray


class Inclusion:
    """Volume between two NURBS surfaces, or one surface offset by ``thickness``.

    The two bounding surfaces must share knot vectors. Surface I is ``r = 0``.
    """

    def __init__(self, bottom: NurbsSurface, top: NurbsSurface | None = None,
                 thickness: float | None = None, name: str = ""):
        self.bottom, self.top, self.name = bottom, top, name
        if top is None:
            if thickness is None or thickness <= 0:
                raise GeometryError("thin-mode inclusion requires thickness d > 0")
            self.thickness = float(thickness)
        else:
            if thickness is not None:
                raise GeometryError("give either a top surface or a thickness, not both")
            same = (bottom.ku.p == top.ku.p and bottom.kv.p == top.kv.p
                    and np.allclose(bottom.ku.knots, top.ku.knots)
                    and np.allclose(bottom.kv.knots, top.kv.knots))
            if not same:
                raise GeometryError("bounding surfaces must share knot vectors")
            self.thickness = None

    @property
    def thin(self) -> bool:
        return self.top is None

    def evaluate(self, s, t, r) -> InclusionPoint:
        s, t, r = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (s, t, r))
        s, t, r = np.broadcast_arrays(s, t, r)
        if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
            raise GeometryError("r outside [0, 1]")
        a = self.bottom.derivatives(s, t)
        rc = r[:, None]
        if self.thin:
            nr = np.cross(a.xu, a.xv)
            n = nr / np.linalg.norm(nr, axis=-1, keepdims=True)
            Vr = n * self.thickness
            x = a.x + rc * Vr
            Vs, Vt, Vss, Vtt = a.xu, a.xv, a.xuu, a.xvv
        else:
            b = self.top.derivatives(s, t)
            x = (1 - rc) * a.x + rc * b.x
            Vs = (1 - rc) * a.xu + rc * b.xu
            Vt = (1 - rc) * a.xv + rc * b.xv
            Vss = (1 - rc) * a.xuu + rc * b.xuu
            Vtt = (1 - rc) * a.xvv + rc * b.xvv
            Vr = b.x - a.x
        J = np.abs(np.einsum("ni,ni->n", np.cross(Vs, Vt), Vr))
        if np.any(J < 1e-14):
            raise GeometryError("degenerate inclusion: Jacobian below 1e-14")
        return InclusionPoint(x, Vs, Vt, Vr, Vss, Vtt, J)

    def __call__(self, s, t, r) -> np.ndarray:
        return self.evaluate(s, t, r).x


def map_inclusion(inc: Inclusion, s, t, r) -> tuple:
    p = inc.evaluate(s, t, r)
    return p.x, p.Vs, p.Vt, p.Vr, p.J


@dataclass(frozen=True)
class LocalFrame:
    """Orthonormal triad at a point of an inclusion (arrays over points).

    ``kappa_x``/``kappa_y`` are curvature magnitudes; ``bend_x``/``bend_y``
    are +1 when the curve bends toward +v3 and -1 otherwise.
    """

    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    Js: np.ndarray
    Jt: np.ndarray
    Jr: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    kappa_x: np.ndarray
    kappa_y: np.ndarray
    bend_x: np.ndarray
    bend_y: np.ndarray
    r_dot_v3: np.ndarray

    @property
    def R(self) -> np.ndarray:
        """Rotation matrices with columns v1, v2, v3, shape (N, 3, 3)."""
        return np.stack([self.v1, self.v2, self.v3], axis=-1)

    @property
    def kappa_x_signed(self) -> np.ndarray:
        return self.bend_x * self.kappa_x

    @property
    def kappa_y_signed(self) -> np.ndarray:
        return self.bend_y * self.kappa_y


def _dot(a, b):
    return np.einsum("ni,ni->n", a, b)


def frame_from_point(p: InclusionPoint) -> LocalFrame:
    Js = np.linalg.norm(p.Vs, axis=-1)
    Jt = np.linalg.norm(p.Vt, axis=-1)
    Jr = np.linalg.norm(p.Vr, axis=-1)
    v3r = np.cross(p.Vs, p.Vt)
    n3 = np.linalg.norm(v3r, axis=-1)
    if np.any(n3 < 1e-12 * Js * Jt):
        raise GeometryError("V_s parallel to V_t: no local frame")
    v1 = p.Vs / Js[:, None]
    v3 = v3r / n3[:, None]
    v2 = np.cross(v3, v1)
    vt = p.Vt / Jt[:, None]
    cos = _dot(v1, vt)
    sin = _dot(vt, v2)
    kx = np.linalg.norm(np.cross(p.Vs, p.Vss), axis=-1) / Js**3
    ky = np.linalg.norm(np.cross(p.Vt, p.Vtt), axis=-1) / Jt**3
    bx = np.where(_dot(p.Vss, v3) < 0, -1.0, 1.0)
    by = np.where(_dot(p.Vtt, v3) < 0, -1.0, 1.0)
    return LocalFrame(v1, v2, v3, Js, Jt, Jr, cos, sin, kx, ky, bx, by, _dot(p.Vr, v3))


def local_frame(inc: Inclusion, s, t, r) -> LocalFrame:
    return frame_from_point(inc.evaluate(s, t, r))


def geometric_derivatives(f: LocalFrame) -> tuple:
    """(ds/dx', ds/dy', dt/dx', dt/dy', dr/dz') for each point of the frame.

    ``dr/dz'`` is ``1/(V_r . v3)``, i.e. ``1/J_r`` when V_r is along +v3.
    """
    if np.any(np.abs(f.sin) < 1e-10):
        raise GeometryError("degenerate parametrization: sin(theta) ~ 0")
    ds_dx = 1.0 / f.Js
    ds_dy = -f.cos / (f.Js * f.sin)
    dt_dx = np.zeros_like(f.Js)
    dt_dy = 1.0 / (f.Jt * f.sin)
    dr_dz = 1.0 / f.r_dot_v3
    return ds_dx, ds_dy, dt_dx, dt_dy, dr_dz
