"""B-spline / NURBS primitives.

Basis evaluation follows the Cox-de Boor recursion (Piegl & Tiller A2.3),
vectorised over parameter values. Refinement of a basis (knot insertion,
order elevation) is described by a *transfer matrix* ``T`` with

    N_old(xi) = N_new(xi) @ T

so that control values re-expressed in the refined basis are ``T @ P``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_TOL = 1e-12


class NurbsError(ValueError):
    """Invalid knot vector, parameter or refinement request."""


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector of polynomial degree ``p`` on [0, 1]."""

    p: int
    knots: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", k)
        p = self.p
        if p < 0:
            raise NurbsError("degree must be >= 0")
        if k.ndim != 1 or k.size < 2 * (p + 1):
            raise NurbsError(f"need at least {2 * (p + 1)} knots for degree {p}")
        if np.any(np.diff(k) < 0):
            raise NurbsError("knots must be nondecreasing")
        if not (np.allclose(k[: p + 1], 0.0) and np.allclose(k[-(p + 1):], 1.0)):
            raise NurbsError("knot vector must be open on [0, 1]")
        _, counts = np.unique(k[p + 1: -(p + 1)], return_counts=True)
        if counts.size and counts.max() > p + 1:
            raise NurbsError("interior knot multiplicity exceeds p+1")

    @classmethod
    def open_uniform(cls, p: int, n_spans: int = 1) -> "KnotVector":
        inner = np.linspace(0.0, 1.0, n_spans + 1)[1:-1]
        return cls(p, np.concatenate([np.zeros(p + 1), inner, np.ones(p + 1)]))

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.p - 1

    @property
    def breaks(self) -> np.ndarray:
        return np.unique(self.knots)

    def greville(self) -> np.ndarray:
        """Greville abscissae (knot averages), one per basis function."""
        p, k = self.p, self.knots
        if p == 0:
            return 0.5 * (k[:-1] + k[1:])
        return np.array([k[i + 1: i + p + 1].mean() for i in range(self.n)])

    def multiplicity(self, u: float) -> int:
        return int(np.sum(np.abs(self.knots - u) < _TOL))

    def find_span(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        span = np.searchsorted(self.knots, xi, side="right") - 1
        return np.clip(span, self.p, self.n - 1)


def _check_param(xi: np.ndarray) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi < -_TOL) or np.any(xi > 1.0 + _TOL):
        raise NurbsError(f"parameter outside [0, 1]: {xi[(xi < 0) | (xi > 1)][:3]}")
    return np.clip(xi, 0.0, 1.0)


def _ders_basis(kv: KnotVector, span: np.ndarray, xi: np.ndarray, nd: int) -> np.ndarray:
    """Nonzero basis functions and derivatives, shape (nd+1, p+1, N)."""
    p, U = kv.p, kv.knots
    N = xi.size
    ndu = np.zeros((p + 1, p + 1, N))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, N))
    right = np.zeros((p + 1, N))
    for j in range(1, p + 1):
        left[j] = xi - U[span + 1 - j]
        right[j] = U[span + j] - xi
        saved = np.zeros(N)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nd + 1, p + 1, N))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1, N))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, min(nd, p) + 1):
            d = np.zeros(N)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, min(nd, p) + 1):
        ders[k] *= fac
        fac *= p - k
    return ders


def eval_basis(kv: KnotVector, xi: float, nderiv: int = 2):
    """Nonzero basis functions at a single parameter.

    Returns
    -------
    first : int
        Index of the first nonzero basis function.
    ders : ndarray, shape (nderiv+1, p+1)
        Row ``k`` holds the k-th derivatives of functions ``first .. first+p``.
    """
    x = _check_param(xi)
    span = kv.find_span(x)
    ders = _ders_basis(kv, span, x, nderiv)[:, :, 0]
    return int(span[0] - kv.p), ders


def basis_matrix(kv: KnotVector, xi, nderiv: int = 0) -> np.ndarray:
    """Dense basis values, shape (nderiv+1, N, n)."""
    x = _check_param(xi)
    span = kv.find_span(x)
    ders = _ders_basis(kv, span, x, nderiv)
    out = np.zeros((nderiv + 1, x.size, kv.n))
    rows = np.arange(x.size)
    for j in range(kv.p + 1):
        out[:, rows, span - kv.p + j] = ders[:, j, :]
    return out


def rational(dense: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Turn dense B-spline values/derivatives (<=2nd) into rational ones."""
    w = np.asarray(weights, dtype=float)
    Nw = dense * w
    W = Nw.sum(axis=-1, keepdims=True)
    R = np.empty_like(dense)
    R[0] = Nw[0] / W[0]
    if dense.shape[0] > 1:
        R[1] = (Nw[1] - R[0] * W[1]) / W[0]
    if dense.shape[0] > 2:
        R[2] = (Nw[2] - 2.0 * R[1] * W[1] - R[0] * W[2]) / W[0]
    return R


# --------------------------------------------------------------------------
# refinement


@dataclass(frozen=True)
class RefinedBasis:
    """A refined 1-D basis together with its transfer matrix from the source."""

    source: KnotVector
    basis: KnotVector
    inserted: tuple = ()
    elevations: int = 0
    transfer: np.ndarray = field(default=None, repr=False)

    @property
    def anchors(self) -> np.ndarray:
        return self.basis.greville()

    def refine_points(self, P: np.ndarray) -> np.ndarray:
        return self.transfer @ np.asarray(P, dtype=float)


def _boehm_insert(kv: KnotVector, P: np.ndarray, u: float) -> tuple[KnotVector, np.ndarray]:
    p, U = kv.p, kv.knots
    if not (0.0 < u < 1.0):
        raise NurbsError(f"inserted knot {u} must lie in (0, 1)")
    if kv.multiplicity(u) + 1 > p + 1:
        raise NurbsError(f"inserting {u} exceeds multiplicity p+1={p + 1}")
    k = int(kv.find_span(np.array([u]))[0])
    Q = np.zeros((P.shape[0] + 1,) + P.shape[1:])
    Q[: k - p + 1] = P[: k - p + 1]
    Q[k + 1:] = P[k:]
    for i in range(k - p + 1, k + 1):
        a = (u - U[i]) / (U[i + p] - U[i])
        Q[i] = a * P[i] + (1.0 - a) * P[i - 1]
    return KnotVector(p, np.insert(U, k + 1, u)), Q


def insert_knots(kv: KnotVector, new_knots) -> RefinedBasis:
    """Boehm knot insertion; the transfer matrix is the refined identity."""
    T = np.eye(kv.n)
    cur = kv
    for u in sorted(float(x) for x in new_knots):
        cur, T = _boehm_insert(cur, T, u)
    return RefinedBasis(kv, cur, tuple(sorted(new_knots)), 0, T)


def transfer_matrix(old: KnotVector, new: KnotVector) -> np.ndarray:
    """Matrix T with N_old = N_new @ T, found by collocation at Greville points.

    Exact whenever span(new) contains span(old).
    """
    g = new.greville()
    A = basis_matrix(new, g)[0]
    B = basis_matrix(old, g)[0]
    T = np.linalg.solve(A, B)
    T[np.abs(T) < 1e-14] = 0.0
    return T


def elevate_order(kv: KnotVector, times: int = 1) -> RefinedBasis:
    """Raise the degree, keeping the continuity at every interior knot."""
    if times < 0:
        raise NurbsError("elevation count must be >= 0")
    if times == 0:
        return RefinedBasis(kv, kv, (), 0, np.eye(kv.n))
    vals, counts = np.unique(kv.knots, return_counts=True)
    knots = np.repeat(vals, counts + times)
    new = KnotVector(kv.p + times, knots)
    return RefinedBasis(kv, new, (), times, transfer_matrix(kv, new))


def refine(kv: KnotVector, elevate: int = 0, insert=()) -> RefinedBasis:
    """Order elevation followed by knot insertion."""
    el = elevate_order(kv, elevate)
    if not len(insert):
        return el
    ins = insert_knots(el.basis, insert)
    return RefinedBasis(kv, ins.basis, ins.inserted, elevate, ins.transfer @ el.transfer)


# --------------------------------------------------------------------------
# surfaces


@dataclass(frozen=True)
class SurfacePoint:
    x: np.ndarray
    xu: np.ndarray
    xv: np.ndarray
    xuu: np.ndarray
    xvv: np.ndarray
    xuv: np.ndarray

    @property
    def normal_raw(self) -> np.ndarray:
        return np.cross(self.xu, self.xv)

    @property
    def jacobian(self) -> np.ndarray:
        return np.linalg.norm(self.normal_raw, axis=-1)

    @property
    def normal(self) -> np.ndarray:
        n = self.normal_raw
        J = np.linalg.norm(n, axis=-1, keepdims=True)
        if np.any(J < 1e-14):
            raise NurbsError("degenerate surface: Jacobian below 1e-14")
        return n / J


class NurbsSurface:
    """Tensor-product NURBS surface.

    ``control`` has shape (n_u, n_v, 3); flat numbering is ``i + n_u * j``,
    i.e. first along xi and then along eta.
    """

    def __init__(self, ku: KnotVector, kv: KnotVector, control, weights=None):
        self.ku, self.kv = ku, kv
        P = np.asarray(control, dtype=float)
        if P.ndim == 2:
            P = P.reshape(kv.n, ku.n, 3).transpose(1, 0, 2)
        if P.shape != (ku.n, kv.n, 3):
            raise NurbsError(f"control net shape {P.shape} != ({ku.n}, {kv.n}, 3)")
        w = np.ones(P.shape[:2]) if weights is None else np.asarray(weights, dtype=float)
        if w.ndim == 1:
            w = w.reshape(kv.n, ku.n).T
        if w.shape != P.shape[:2]:
            raise NurbsError("weights do not match control net")
        if np.any(w <= 0):
            raise NurbsError("weights must be strictly positive")
        self.control, self.weights = P, w

    @property
    def shape(self) -> tuple[int, int]:
        return self.control.shape[:2]

    def derivatives(self, u, v) -> SurfacePoint:
        u = _check_param(u)
        v = _check_param(v)
        u, v = np.broadcast_arrays(u, v)
        Nu = basis_matrix(self.ku, u, 2)
        Nv = basis_matrix(self.kv, v, 2)
        Pw = self.control * self.weights[..., None]

        def hom(a, b):
            A = np.einsum("ni,nj,ijc->nc", Nu[a], Nv[b], Pw)
            W = np.einsum("ni,nj,ij->n", Nu[a], Nv[b], self.weights)[:, None]
            return A, W

        A, W = hom(0, 0)
        Au, Wu = hom(1, 0)
        Av, Wv = hom(0, 1)
        Auu, Wuu = hom(2, 0)
        Avv, Wvv = hom(0, 2)
        Auv, Wuv = hom(1, 1)
        x = A / W
        xu = (Au - Wu * x) / W
        xv = (Av - Wv * x) / W
        xuu = (Auu - 2 * Wu * xu - Wuu * x) / W
        xvv = (Avv - 2 * Wv * xv - Wvv * x) / W
        xuv = (Auv - Wu * xv - Wv * xu - Wuv * x) / W
        return SurfacePoint(x, xu, xv, xuu, xvv, xuv)

    def __call__(self, u, v) -> np.ndarray:
        return self.derivatives(u, v).x

    def basis(self, u, v, nderiv: int = 1):
        """Rational basis values on the control net, flat index ``i + n_u*j``.

        Returns (R, R_u, R_v) each of shape (N, n_u*n_v) (derivatives only
        when ``nderiv`` >= 1).
        """
        return tensor_rational_basis(self.ku, self.kv, self.weights, u, v, nderiv)

    def refined(self, ru: RefinedBasis, rv: RefinedBasis) -> "NurbsSurface":
        """Same geometry expressed in refined bases (homogeneous coordinates)."""
        Pw = self.control * self.weights[..., None]
        Pw4 = np.concatenate([Pw, self.weights[..., None]], axis=-1)
        Q = np.einsum("ai,bj,ijc->abc", ru.transfer, rv.transfer, Pw4)
        w = Q[..., 3]
        return NurbsSurface(ru.basis, rv.basis, Q[..., :3] / w[..., None], w)


def tensor_rational_basis(ku, kv, weights, u, v, nderiv=1):
    u = _check_param(u)
    v = _check_param(v)
    u, v = np.broadcast_arrays(u, v)
    Nu = basis_matrix(ku, u, nderiv)
    Nv = basis_matrix(kv, v, nderiv)
    n = u.size
    w = weights.T.reshape(-1)  # flat index i + n_u * j

    def tp(a, b):
        return np.einsum("ni,nj->nji", Nu[a], Nv[b]).reshape(n, -1)

    B = tp(0, 0) * w
    W = B.sum(axis=1, keepdims=True)
    R = B / W
    if nderiv == 0:
        return (R,)
    Bu = tp(1, 0) * w
    Bv = tp(0, 1) * w
    Ru = (Bu - R * Bu.sum(axis=1, keepdims=True)) / W
    Rv = (Bv - R * Bv.sum(axis=1, keepdims=True)) / W
    return R, Ru, Rv


def eval_surface(s: NurbsSurface, u, v):
    """Point, tangents, unit normal and area Jacobian of a surface."""
    d = s.derivatives(u, v)
    return d.x, d.xu, d.xv, d.normal, d.jacobian


def infinite_basis(eta):
    """Decay functions toward an unbounded edge and their derivatives."""
    e = np.asarray(eta, dtype=float)
    if np.any(e < 0.0) or np.any(e >= 1.0):
        raise NurbsError("infinite basis requires 0 <= eta < 1 (pole at eta = 1)")
    q = 1.0 - e
    m1 = (1.0 - 2.0 * e) / q
    m2 = e / q
    d2 = 1.0 / q**2
    return m1, m2, -d2, d2


def quarter_circle_weights() -> np.ndarray:
    return np.array([1.0, np.sqrt(0.5), 1.0])
