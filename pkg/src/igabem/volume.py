"""Volume integrals of the strain kernel against initial-stress shape functions.

For a source point ``y`` and an inclusion grid this computes, for every
grid point ``j``, the 3x6 block ``int E'(y, x) M_j(x) dOmega`` where the
strain indices of ``E'`` are expressed in the local frame at ``x`` and the
source index stays global.  Integration regions are the supports of the
shape functions; each region is routed to regular, near-singular plus
exclusion (numeric pyramids or closed form) integration depending on where
the source lies.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .analytic import analytic_cylinder_E
from .geometry import Inclusion, frame_from_point, local_frame
from .inclusion_field import InclusionGrid
from .kernels import ElasticMaterial, kernel_E, rotate_E_local, voigt_pack
from .quadrature import (
    Box,
    QuadratureError,
    Rule,
    near_singular_subregions,
    pyramid_rule,
    regular_rule,
    subregion_rule,
)

log = logging.getLogger(__name__)

PARAM_TOL = 1e-9


@dataclass(frozen=True)
class VolumeOptions:
    """Controls for singular volume integration.

    ``option`` 1 integrates the exclusion zone numerically with collapsed
    pyramids, option 2 with closed forms over a cylinder sector.  The
    exclusion radius is ``radius`` if given, else ``radius_fraction`` of the
    smaller in-plane edge of the piece, limited to ``curvature_fraction``
    times the radius of curvature.
    """

    option: int = 2
    radius: float | None = None
    radius_fraction: float = 0.25
    curvature_fraction: float = 0.1
    pyramid_order: int = 4

    def __post_init__(self):
        if self.option not in (1, 2):
            raise QuadratureError("integration option must be 1 or 2")


@dataclass(frozen=True)
class Exclusion:
    """Cylinder-sector exclusion zone at a source point."""

    H: float
    R: float
    phi1: float
    phi2: float
    position: str
    probe: tuple  # parameter point just inside the owning piece


def invert_inclusion(inc: Inclusion, y, tol: float = 1e-9, scale: float | None = None):
    """Parameters (s, t, r) of a point in the closed inclusion, or None."""
    y = np.asarray(y, float)
    g = np.linspace(0, 1, 9)
    S, T, Rr = np.meshgrid(g, g, np.linspace(0, 1, 3), indexing="ij")
    P = np.column_stack([S.ravel(), T.ravel(), Rr.ravel()])
    X = inc(*P.T)
    d = np.linalg.norm(X - y, axis=1)
    ext = np.ptp(X, axis=0).max()
    scale = scale or ext
    if d.min() > 0.5 * ext:
        return None
    best = None
    for k in np.argsort(d)[:4]:
        p = P[k].copy()
        for _ in range(50):
            ev = inc.evaluate(*p)
            res = ev.x[0] - y
            Jm = np.column_stack([ev.Vs[0], ev.Vt[0], ev.Vr[0]])
            dp = np.linalg.lstsq(Jm, -res, rcond=None)[0]
            p = np.clip(p + dp, 0.0, 1.0)
            if np.linalg.norm(dp) < 1e-14:
                break
        err = np.linalg.norm(inc(*p)[0] - y)
        if best is None or err < best[1]:
            best = (p, err)
        if err < tol * scale:
            return p
    return None


def _corner_flags(box: Box, yp, tol=PARAM_TOL):
    flags = []
    for d in range(3):
        if abs(yp[d] - box.hi[d]) < tol:
            flags.append(1)
        elif abs(yp[d] - box.lo[d]) < tol:
            flags.append(0)
        else:
            raise QuadratureError("source is not at a vertex of the piece")
    return flags


def _sector(vs: int, vt: int, theta: float) -> tuple[float, float]:
    # piece extends toward -s when the source sits on its high-s face
    a_s = -1 if vs else 1
    a_t = -1 if vt else 1
    return {(1, 1): (0.0, theta), (-1, 1): (theta, np.pi),
            (-1, -1): (np.pi, np.pi + theta), (1, -1): (np.pi + theta, 2 * np.pi)}[(a_s, a_t)]


def singular_piece(inc: Inclusion, box: Box, yp, opts: VolumeOptions):
    """Rule and exclusion zones for a piece with the source at a vertex."""
    vs, vt, vr = _corner_flags(box, yp)
    fr = local_frame(inc, *yp)
    Js, Jt = float(fr.Js[0]), float(fr.Jt[0])
    rv3 = float(fr.r_dot_v3[0])
    sz = box.size
    Ls, Lt, H = Js * sz[0], Jt * sz[1], abs(rv3) * sz[2]
    Lmin = min(Ls, Lt)
    R = opts.radius if opts.radius is not None else opts.radius_fraction * Lmin
    kappa = max(float(fr.kappa_x[0]), float(fr.kappa_y[0]))
    if kappa > 0:
        R = min(R, opts.curvature_fraction / kappa)
    R = min(R, 0.9 * Lmin)
    R1, R2 = R / Ls, R / Lt

    def to_param(u):
        s = u[:, 0] if vs else 1.0 - u[:, 0]
        t = u[:, 1] if vt else 1.0 - u[:, 1]
        return box.to_param(np.column_stack([s, t, u[:, 2]]))

    shape = "arc" if opts.option == 2 else "box"
    rules = []
    for sub in near_singular_subregions(R1, R2, shape):
        u, w = subregion_rule(sub, R / Lmin, H / Lmin)
        rules.append(Rule(to_param(u), w * box.volume))
    excl = []
    if opts.option == 1:
        u, w = pyramid_rule(R1, R2, vr, opts.pyramid_order)
        rules.append(Rule(to_param(u), w * box.volume))
    else:
        theta = float(np.arctan2(fr.sin[0], fr.cos[0]))
        p1, p2 = _sector(vs, vt, theta)
        up = (vr == 0) == (rv3 > 0)  # piece extends toward +z'
        probe = box.to_param(np.array([[0.5 + (0.5 - 1e-7) * (2 * f - 1) for f in (vs, vt, vr)]]))[0]
        excl.append(Exclusion(H, R, p1, p2, "bottom" if up else "top", tuple(probe)))
    return Rule.join(rules), excl


def integration_plan(grid: InclusionGrid, y, yp, opts: VolumeOptions):
    """Quadrature points for all regions plus exclusion zones at the source."""
    inc = grid.inclusion
    rules, excl = [], []
    for cell in grid.sigma_cells():
        if yp is not None and cell.contains(yp, PARAM_TOL):
            for piece in cell.split(yp, PARAM_TOL):
                r, e = singular_piece(inc, piece, yp, opts)
                rules.append(r)
                excl += e
        else:
            rules.append(regular_rule(inc, cell, y))
    return Rule.join(rules), excl


def volume_block(grid: InclusionGrid, mat: ElasticMaterial, y, opts: VolumeOptions,
                 yp=None, locate: bool = True) -> np.ndarray:
    """``int E'(y, x) M_j(x) dOmega`` for all grid points j, shape (3, 6, n).

    ``yp`` are the inclusion parameters of the source when it lies in the
    closed inclusion; with ``locate`` they are found by point inversion.
    """
    y = np.asarray(y, float)
    inc = grid.inclusion
    if yp is None and locate:
        yp = invert_inclusion(inc, y)
    rule, excl = integration_plan(grid, y, yp, opts)
    ev = inc.evaluate(*rule.points.T)
    Rx = frame_from_point(ev).R
    Ep = voigt_pack(rotate_E_local(kernel_E(mat, y, ev.x), Rx))
    Msig = grid.sigma_basis(*rule.points.T)
    out = np.einsum("p,pij,pn->ijn", rule.weights * ev.J, Ep, Msig)
    if excl:
        Ry = local_frame(inc, *yp).R[0]
        for z in excl:
            dE = analytic_cylinder_E(mat, z.H, z.R, z.phi1, z.phi2, z.position)
            m = grid.sigma_basis(*np.array(z.probe)[:, None])[0]
            out += np.einsum("ij,n->ijn", Ry @ dE, m)
    return out
