"""Surface integrals of the displacement and traction kernels over patches.

Each patch parameter domain is split into the knot spans of its
unknown-field basis.  Spans away from the source use tensor Gauss rules
refined by a proximity-driven quadtree.  A span whose closure contains the
source is split at the source, graded toward it, and the innermost square
is integrated with Duffy triangles collapsed onto the source.  On infinite
patches the unbounded direction beyond eta = 0.5 is covered by bands that
halve the distance to the pole.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ETA_POLE, InfinitePatch
from .kernels import ElasticMaterial, kelvin_T, kelvin_U
from .quadrature import gauss_points, select_order

BOUNDARY_BASE_ORDER = 6
DUFFY_ORDER = 10
GRADING_LEVELS = 3
TAIL_BANDS = 24
PARAM_TOL = 1e-10


@dataclass(frozen=True)
class SurfaceRule:
    params: np.ndarray   # (N, 2)
    weights: np.ndarray  # (N,)

    @staticmethod
    def join(rules) -> "SurfaceRule":
        rules = [r for r in rules if r.weights.size]
        if not rules:
            return SurfaceRule(np.zeros((0, 2)), np.zeros(0))
        return SurfaceRule(np.vstack([r.params for r in rules]),
                           np.concatenate([r.weights for r in rules]))


def _gauss01(n):
    x, w = gauss_points(int(n))
    return 0.5 * (x + 1.0), 0.5 * w


def _tensor(rect, nu, nv) -> SurfaceRule:
    (a, b), (c, d) = rect
    xu, wu = _gauss01(nu)
    xv, wv = _gauss01(nv)
    U, V = np.meshgrid(a + (b - a) * xu, c + (d - c) * xv, indexing="ij")
    W = np.outer(wu, wv) * (b - a) * (d - c)
    return SurfaceRule(np.column_stack([U.ravel(), V.ravel()]), W.ravel())


def _duffy(rect, corner, n=DUFFY_ORDER) -> SurfaceRule:
    """Two collapsed triangles covering ``rect`` with apex at ``corner``."""
    (a, b), (c, d) = rect
    P = np.array(corner, float)
    ring = [np.array(v, float) for v in ((a, c), (b, c), (b, d), (a, d))]
    k = int(np.argmin([np.linalg.norm(v - P) for v in ring]))
    ring = ring[k:] + ring[:k]
    # the two edges not touching the apex are the bases of the triangles
    tris = [(ring[1], ring[2]), (ring[2], ring[3])]
    xu, wu = _gauss01(n)
    out = []
    for A, B in tris:
        U, V = np.meshgrid(xu, xu, indexing="ij")
        pts = P + U.ravel()[:, None] * ((A - P) + V.ravel()[:, None] * (B - A))
        det = abs((A - P)[0] * (B - A)[1] - (A - P)[1] * (B - A)[0])
        W = np.outer(wu, wu).ravel() * U.ravel() * det
        out.append(SurfaceRule(pts, W))
    return SurfaceRule.join(out)


class _Sizer:
    """Physical distance and edge lengths of parameter rectangles of a patch."""

    def __init__(self, patch, y):
        self.patch, self.y = patch, np.asarray(y, float)

    def measure(self, rect):
        (a, b), (c, d) = rect
        g = np.linspace(0, 1, 5)
        U, V = np.meshgrid(a + (b - a) * g, c + (d - c) * g, indexing="ij")
        ev = self.patch.evaluate(U.ravel(), V.ravel())
        dist = float(np.min(np.linalg.norm(ev.x - self.y, axis=1)))
        Lu = float(np.max(np.linalg.norm(ev.xu, axis=1))) * (b - a)
        Lv = float(np.max(np.linalg.norm(ev.xv, axis=1))) * (d - c)
        return dist, Lu, Lv


def _regular(sizer: _Sizer, rect, depth=0, max_depth=12) -> list:
    dist, Lu, Lv = sizer.measure(rect)
    size = max(Lu, Lv)
    if dist / size < 1.0 and depth < max_depth:
        (a, b), (c, d) = rect
        parts = [rect]
        if Lu > 0.5 * size:
            parts = [((a, 0.5 * (a + b)), r[1]) for r in parts] + [((0.5 * (a + b), b), r[1]) for r in parts]
        if Lv > 0.5 * size:
            parts = [(r[0], (c, 0.5 * (c + d))) for r in parts] + [(r[0], (0.5 * (c + d), d)) for r in parts]
        out = []
        for p in parts:
            out += _regular(sizer, p, depth + 1, max_depth)
        return out
    nu = select_order(dist / max(Lu, 1e-300), BOUNDARY_BASE_ORDER)
    nv = select_order(dist / max(Lv, 1e-300), BOUNDARY_BASE_ORDER)
    return [_tensor(rect, nu, nv)]


def _singular_corner(sizer: _Sizer, rect, corner, level=0) -> list:
    """Rect with the source at ``corner``: cut to near-square, grade, then Duffy."""
    (a, b), (c, d) = rect
    _, Lu, Lv = sizer.measure(rect)
    cu, cv = corner
    if Lu > 2.0 * Lv or Lv > 2.0 * Lu:
        if Lu > Lv:
            m = 0.5 * (a + b)
            near, far = (((a, m), (c, d)), ((m, b), (c, d))) if abs(cu - a) < abs(cu - b) \
                else (((m, b), (c, d)), ((a, m), (c, d)))
        else:
            m = 0.5 * (c + d)
            near, far = (((a, b), (c, m)), ((a, b), (m, d))) if abs(cv - c) < abs(cv - d) \
                else (((a, b), (m, d)), ((a, b), (c, m)))
        return _singular_corner(sizer, near, corner, level) + _regular(sizer, far)
    if level < GRADING_LEVELS:
        mu, mv = 0.5 * (a + b), 0.5 * (c + d)
        quads = [((a, mu), (c, mv)), ((mu, b), (c, mv)), ((a, mu), (mv, d)), ((mu, b), (mv, d))]
        out = []
        for q in quads:
            (qa, qb), (qc, qd) = q
            has = (abs(cu - qa) < PARAM_TOL or abs(cu - qb) < PARAM_TOL) and \
                  (abs(cv - qc) < PARAM_TOL or abs(cv - qd) < PARAM_TOL)
            out += _singular_corner(sizer, q, corner, level + 1) if has else _regular(sizer, q)
        return out
    return [_duffy(rect, corner)]


def _split_at(rect, p):
    (a, b), (c, d) = rect
    us = [(a, p[0]), (p[0], b)] if a + PARAM_TOL < p[0] < b - PARAM_TOL else [(a, b)]
    vs = [(c, p[1]), (p[1], d)] if c + PARAM_TOL < p[1] < d - PARAM_TOL else [(c, d)]
    return [(u, v) for u in us for v in vs]


def surface_rule(patch, y, yp=None) -> SurfaceRule:
    """Quadrature points over a whole patch for source ``y``.

    ``yp`` is the parameter pair of the source when it lies on the patch.
    """
    bu, bv = patch.breaks()
    infinite = isinstance(patch, InfinitePatch)
    if infinite:
        bv = np.array([0.0, 0.5])
    sizer = _Sizer(patch, y)
    rules = []
    for a, b in zip(bu[:-1], bu[1:]):
        for c, d in zip(bv[:-1], bv[1:]):
            rect = ((a, b), (c, d))
            inside = yp is not None and a - PARAM_TOL <= yp[0] <= b + PARAM_TOL \
                and c - PARAM_TOL <= yp[1] <= d + PARAM_TOL
            if inside:
                for sub in _split_at(rect, yp):
                    rules += _singular_corner(sizer, sub, tuple(yp))
            else:
                rules += _regular(sizer, rect)
        if infinite:
            rules += _tail(sizer, (a, b))
    return SurfaceRule.join(rules)


def _tail(sizer: _Sizer, urange) -> list:
    """Bands eta in [1 - 2^-k, 1 - 2^-(k+1)] toward the pole."""
    out = []
    for k in range(1, TAIL_BANDS + 1):
        c, d = 1.0 - 2.0**-k, min(1.0 - 2.0**-(k + 1), ETA_POLE)
        if d <= c:
            break
        out += _regular(sizer, (urange, (c, d)))
    return out


def locate_on_patch(patch, x, tol: float = 1e-9):
    """Parameters of ``x`` on a patch (within ``tol`` relative), or None."""
    x = np.asarray(x, float)
    g = np.linspace(0.0, 1.0, 11)
    gv = np.linspace(0.0, 0.9, 10) if isinstance(patch, InfinitePatch) else g
    U, V = np.meshgrid(g, gv, indexing="ij")
    ev = patch.evaluate(U.ravel(), V.ravel())
    d = np.linalg.norm(ev.x - x, axis=1)
    scale = max(np.ptp(ev.x, axis=0).max(), 1e-12)
    vmax = 0.9 if isinstance(patch, InfinitePatch) else 1.0
    for k in np.argsort(d)[:3]:
        p = np.array([U.ravel()[k], V.ravel()[k]])
        for _ in range(60):
            e = patch.evaluate(p[0], p[1])
            res = e.x[0] - x
            Jm = np.column_stack([e.xu[0], e.xv[0]])
            dp = np.linalg.lstsq(Jm, -res, rcond=None)[0]
            p = np.array([np.clip(p[0] + dp[0], 0, 1), np.clip(p[1] + dp[1], 0, vmax)])
            if np.linalg.norm(dp) < 1e-15:
                break
        if np.linalg.norm(patch.evaluate(p[0], p[1]).x[0] - x) < tol * scale:
            return p
    return None


@dataclass
class PatchIntegrals:
    H: np.ndarray            # (3, 3, n_field) traction kernel against field basis
    Tsum: np.ndarray | None  # (3, 3) plain integral of T (None on the source patch)
    G: np.ndarray | None     # (3, 3, n_field) displacement kernel against basis
    load: np.ndarray | None  # (3,) displacement kernel against prescribed traction


def integrate_patch(patch, mat: ElasticMaterial, y, yp=None, want_G=False,
                    traction=None) -> PatchIntegrals:
    """Kernel integrals over one patch for a source point ``y``.

    On a patch containing the source (``yp`` given) the traction kernel is
    integrated against ``R_k(x) - R_k(yp)``, which is weakly singular.
    ``traction`` maps (x, n) to prescribed tractions (N, 3).
    """
    rule = surface_rule(patch, y, yp)
    ev = patch.evaluate(rule.params[:, 0], rule.params[:, 1])
    w = rule.weights * ev.J
    Rk = patch.field_basis(rule.params[:, 0], rule.params[:, 1])
    T = kelvin_T(mat, y, ev.x, ev.n)
    if yp is not None:
        R0 = patch.field_basis(np.array([yp[0]]), np.array([yp[1]]))[0]
        H = np.einsum("p,pij,pk->ijk", w, T, Rk - R0)
        Tsum = None
    else:
        H = np.einsum("p,pij,pk->ijk", w, T, Rk)
        Tsum = np.einsum("p,pij->ij", w, T)
    G = load = None
    if want_G or traction is not None:
        U = kelvin_U(mat, y, ev.x)
        if want_G:
            G = np.einsum("p,pij,pk->ijk", w, U, Rk)
        if traction is not None:
            load = np.einsum("p,pij,pj->i", w, U, traction(ev.x, ev.n))
    return PatchIntegrals(H, Tsum, G, load)
