"""Quadrature rules for inclusion volumes.

Every rule is a set of points in the inclusion parameter cube (s, t, r)
with weights that already contain the Jacobian of the map from the
reference element to parameter space.  Multiplying by the geometric
Jacobian J(s) and the integrand gives the physical integral.

Regions touching the source are split so that the source sits at a vertex
of every piece.  Each piece is then the union of two tapered subregions
and a small exclusion zone around the source.  The exclusion zone is
integrated either numerically with pyramids collapsing onto the source
(option 1) or with closed forms over a cylinder sector (option 2, see
:mod:`igabem.analytic`).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .nurbs import KnotVector, NurbsSurface

MAX_ORDER = 16
BASE_ORDER = 4


class QuadratureError(ValueError):
    """Invalid rule request or unresolved integration routing."""


@functools.lru_cache(maxsize=128)
def gauss_points(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if not 1 <= int(order) <= 64:
        raise QuadratureError(f"unsupported Gauss order {order} (1..64)")
    x, w = np.polynomial.legendre.leggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def select_order(ratio: float, base: int = BASE_ORDER, cap: int = MAX_ORDER) -> int:
    """Gauss order from the proximity ratio distance/size.

    ``base`` for ratio > 4, otherwise ``base + ceil(4 / ratio)`` capped.
    """
    if ratio > 4.0:
        return base
    if ratio <= 0.0:
        return cap
    return int(min(cap, base + math.ceil(4.0 / ratio)))


@dataclass
class Rule:
    """Points in the parameter cube and their weights."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __add__(self, other: "Rule") -> "Rule":
        return Rule(np.vstack([self.points, other.points]),
                    np.concatenate([self.weights, other.weights]))

    @staticmethod
    def join(rules) -> "Rule":
        rules = list(rules)
        if not rules:
            return Rule()
        return Rule(np.vstack([r.points for r in rules]),
                    np.concatenate([r.weights for r in rules]))

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class Box:
    """Axis-aligned parameter box ``lo <= (s, t, r) <= hi``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if np.any(hi <= lo) or np.any(lo < -1e-12) or np.any(hi > 1 + 1e-12):
            raise QuadratureError(f"invalid integration box {self.lo}..{self.hi}")

    @property
    def size(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def to_param(self, u: np.ndarray) -> np.ndarray:
        """Normalised box coordinates in [0,1]^3 to parameters."""
        return np.asarray(self.lo) + u * self.size

    def contains(self, p, tol: float = 1e-10) -> bool:
        p = np.asarray(p)
        return bool(np.all(p >= np.asarray(self.lo) - tol) and np.all(p <= np.asarray(self.hi) + tol))

    def split(self, at, tol: float = 1e-10) -> list["Box"]:
        """Split at a point; directions where ``at`` is on the boundary are kept whole."""
        cuts = []
        for d in range(3):
            a, b = self.lo[d], self.hi[d]
            c = at[d]
            cuts.append([(a, c), (c, b)] if a + tol < c < b - tol else [(a, b)])
        out = []
        for (s0, s1) in cuts[0]:
            for (t0, t1) in cuts[1]:
                for (r0, r1) in cuts[2]:
                    out.append(Box((s0, t0, r0), (s1, t1, r1)))
        return out

    def bisect(self, dirs) -> list["Box"]:
        parts = [(tuple(self.lo), tuple(self.hi))]
        for d in dirs:
            new = []
            for lo, hi in parts:
                m = 0.5 * (lo[d] + hi[d])
                hi1 = list(hi); hi1[d] = m
                lo2 = list(lo); lo2[d] = m
                new += [(lo, tuple(hi1)), (tuple(lo2), hi)]
            parts = new
        return [Box(lo, hi) for lo, hi in parts]


def tensor_rule(orders) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the unit cube [0,1]^3."""
    xs, ws = [], []
    for o in orders:
        x, w = gauss_points(int(o))
        xs.append(0.5 * (x + 1.0))
        ws.append(0.5 * w)
    X = np.stack(np.meshgrid(*xs, indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.einsum("i,j,k->ijk", *ws).ravel()
    return X, W


def box_rule(box: Box, orders) -> Rule:
    """Gauss rule over a parameter box (weights include Δs Δt Δr)."""
    X, W = tensor_rule(orders)
    return Rule(box.to_param(X), W * box.volume)


# --------------------------------------------------------------------------
# regular integration with proximity-driven subdivision


def _physical_extent(inc, box: Box, y) -> tuple[float, np.ndarray]:
    """Distance from ``y`` to a sampled box and its edge lengths."""
    g = [np.linspace(box.lo[d], box.hi[d], 5 if d < 2 else 3) for d in range(3)]
    P = np.stack(np.meshgrid(*g, indexing="ij"), axis=-1).reshape(-1, 3)
    ev = inc.evaluate(P[:, 0], P[:, 1], P[:, 2])
    dist = float(np.min(np.linalg.norm(ev.x - y, axis=1)))
    sz = box.size
    lengths = np.array([np.max(np.linalg.norm(ev.Vs, axis=1)) * sz[0],
                        np.max(np.linalg.norm(ev.Vt, axis=1)) * sz[1],
                        np.max(np.linalg.norm(ev.Vr, axis=1)) * sz[2]])
    return dist, lengths


def regular_rule(inc, box: Box, y, max_depth: int = 8, _depth: int = 0) -> Rule:
    """Adaptive Gauss rule for a source outside the box.

    The box is bisected along its long directions while distance/size < 1;
    Gauss orders per direction follow :func:`select_order`.
    """
    dist, L = _physical_extent(inc, box, np.asarray(y, float))
    size = L.max()
    if dist < 1e-12:
        raise QuadratureError("source touches the region: use the singular route")
    if dist / size < 1.0 and _depth < max_depth:
        dirs = [d for d in range(3) if L[d] > 0.5 * size]
        return Rule.join(regular_rule(inc, b, y, max_depth, _depth + 1) for b in box.bisect(dirs))
    orders = [select_order(dist / max(L[d], 1e-300)) for d in range(3)]
    return box_rule(box, orders)


def integrate_regular(inc, box: Box, y, integrand) -> np.ndarray:
    """Integrate ``integrand(points) * J`` over a box with the regular rule."""
    rule = regular_rule(inc, box, y)
    J = inc.evaluate(*rule.points.T).J
    vals = integrand(rule.points)
    return np.tensordot(rule.weights * J, vals, axes=(0, 0))


# --------------------------------------------------------------------------
# subregions around a source at the (1, 1) corner of a normalised footprint

_QUAD = KnotVector(2, [0, 0, 0, 1, 1, 1])
_LIN = KnotVector(1, [0, 0, 1, 1])


@dataclass(frozen=True)
class Subregion:
    """Planar NURBS map from (xi, eta) to the normalised footprint."""

    control: np.ndarray      # (3, 2, 2): xi-index, eta-index, (s, t)
    weights: np.ndarray      # (3, 2)

    def surface(self) -> NurbsSurface:
        P = np.concatenate([self.control, np.zeros((3, 2, 1))], axis=-1)
        return NurbsSurface(_QUAD, _LIN, P, self.weights)

    def map(self, xi, eta):
        d = self.surface().derivatives(xi, eta)
        J = d.xu[:, 0] * d.xv[:, 1] - d.xu[:, 1] * d.xv[:, 0]
        return d.x[:, :2], J


def near_singular_subregions(R1: float, R2: float, shape: str = "arc") -> list[Subregion]:
    """Two tapered subregions covering the unit footprint minus the exclusion.

    The source is at (1, 1).  ``shape='arc'`` bounds the exclusion by a
    quarter ellipse with semi-axes R1, R2 (a circle of radius R in physical
    space when R1 = R/L_s, R2 = R/L_t); ``shape='box'`` bounds it by the
    rectangle [1-R1, 1] x [1-R2, 1].
    """
    if not (0.0 <= R1 < 1.0 and 0.0 <= R2 < 1.0):
        raise QuadratureError("exclusion radius must be smaller than the region")
    if shape == "arc":
        c4, t8 = math.cos(math.pi / 4), math.tan(math.pi / 8)
        w = math.cos(math.pi / 8)
        M = (1 - c4 * R1, 1 - c4 * R2)
        inner1 = [M, (1 - t8 * R1, 1 - R2), (1.0, 1 - R2)]
        inner2 = [(1 - R1, 1.0), (1 - R1, 1 - t8 * R2), M]
    elif shape == "box":
        w = 1.0
        M = (1 - R1, 1 - R2)
        inner1 = [M, (1 - 0.5 * R1, 1 - R2), (1.0, 1 - R2)]
        inner2 = [(1 - R1, 1.0), (1 - R1, 1 - 0.5 * R2), M]
    else:
        raise QuadratureError(f"unknown exclusion shape {shape!r}")
    outer1 = [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]
    outer2 = [(0.0, 1.0), (0.0, 0.5), (0.0, 0.0)]
    wts = np.array([[1.0, 1.0], [1.0, w], [1.0, 1.0]])
    out = []
    for outer, inner in ((outer1, inner1), (outer2, inner2)):
        P = np.stack([np.array(outer), np.array(inner)], axis=1)
        out.append(Subregion(P, wts))
    return out


def _band_breaks(ratio: float) -> np.ndarray:
    """Band limits in eta, graded geometrically toward the inner edge (eta = 1)."""
    g = [1.0]
    while g[-1] > 2.0 * ratio and len(g) < 40:
        g.append(g[-1] / 2.0)
    g.append(0.0)
    return 1.0 - np.array(g)


def subregion_rule(sub: Subregion, R_norm: float, depth_ratio: float,
                   angular_order: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Rule for one tapered subregion in normalised (s, t) plus r-weight info.

    Returns points (N, 3) in normalised box coordinates with r in [0, 1] and
    weights containing the footprint Jacobian.  ``R_norm`` is the exclusion
    radius relative to the footprint size; ``depth_ratio`` is the box
    thickness relative to the footprint size.
    """
    ratio = max(R_norm, 1e-6)
    eb = _band_breaks(ratio)
    pts, wts = [], []
    for a, b in zip(eb[:-1], eb[1:]):
        g_out, g_in = 1.0 - a, 1.0 - b
        dist_in = ratio + g_in * (1.0 - ratio)
        width = (g_out - g_in) * (1.0 - ratio)
        o_eta = select_order(dist_in / width)
        o_xi = angular_order or select_order(dist_in / (0.8 * (dist_in + width)))
        o_r = select_order(dist_in / max(depth_ratio, 1e-300))
        X, W = tensor_rule((o_xi, o_eta, o_r))
        eta = a + (b - a) * X[:, 1]
        st, J = sub.map(X[:, 0], eta)
        pts.append(np.column_stack([st, X[:, 2]]))
        wts.append(W * (b - a) * np.abs(J))
    return np.vstack(pts), np.concatenate(wts)


def pyramid_rule(R1: float, R2: float, apex_r: int, order: int = 4):
    """Option-1 exclusion: the box [1-R1,1]x[1-R2,1]x[0,1] as 3 pyramids.

    The apex is the source at (1, 1, apex_r); bases are the three faces not
    containing it.  Each pyramid is mapped by
    ``x = (1 - rho) F(sigma, tau) + rho * apex`` so the Jacobian vanishes as
    ``(1 - rho)**2`` at the source.  Returns points in normalised box
    coordinates and weights.
    """
    apex = np.array([1.0, 1.0, float(apex_r)])
    s0, t0, rf = 1.0 - R1, 1.0 - R2, 1.0 - float(apex_r)
    faces = [
        np.array([[s0, t0, 0], [s0, 1, 0], [s0, t0, 1], [s0, 1, 1]], float),
        np.array([[s0, t0, 0], [1, t0, 0], [s0, t0, 1], [1, t0, 1]], float),
        np.array([[s0, t0, rf], [1, t0, rf], [s0, 1, rf], [1, 1, rf]], float),
    ]
    X, W = tensor_rule((order, order, order))
    pts, wts = [], []
    for F in faces:
        x, J = pyramid_map(F, apex, X)
        pts.append(x)
        wts.append(W * np.abs(J))
    return np.vstack(pts), np.concatenate(wts)


def pyramid_map(face: np.ndarray, apex: np.ndarray, X: np.ndarray):
    """Collapsed map of (sigma, tau, rho) onto a pyramid and its Jacobian.

    ``face`` holds the bilinear base corners ordered (0,0), (1,0), (0,1), (1,1).
    """
    sg, ta, rh = X[:, 0:1], X[:, 1:2], X[:, 2:3]
    c00, c10, c01, c11 = face
    F = (1 - sg) * (1 - ta) * c00 + sg * (1 - ta) * c10 + (1 - sg) * ta * c01 + sg * ta * c11
    Fs = (1 - ta) * (c10 - c00) + ta * (c11 - c01)
    Ft = (1 - sg) * (c01 - c00) + sg * (c11 - c10)
    x = (1 - rh) * F + rh * apex
    a = (1 - rh) * Fs
    b = (1 - rh) * Ft
    c = apex - F
    J = np.einsum("ni,ni->n", np.cross(a, b), c)
    if np.any(np.abs(J[rh[:, 0] < 0.5]) < 1e-300):
        raise QuadratureError("degenerate pyramid (zero volume)")
    return x, J


def tapered_jacobian(R1: float, R2: float, xi: float, eta) -> np.ndarray:
    """Footprint Jacobian of subregion 1 along eta (used for decay fits)."""
    sub = near_singular_subregions(R1, R2, "arc")[0]
    eta = np.atleast_1d(eta)
    return sub.map(np.full_like(eta, xi), eta)[1]


def decay_exponent(dist: np.ndarray, J: np.ndarray) -> float:
    """Slope of log|J| against log(distance)."""
    return float(np.polyfit(np.log(dist), np.log(np.abs(J)), 1)[0])
