"""Collocation of the regularised boundary integral equation and volume coupling.

The discrete system is::

    L x = r + B0 sigma0          (collocation at the anchors)
    u_grid = A_hat x + c_bar + B0_bar sigma0   (displacements at grid points)

``x`` stacks the unknown nodal displacements followed by the unknown
traction coefficients of patches with prescribed displacements; ``sigma0``
stacks the local initial stresses of all grid points (6 per point).
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import integrate_patch, locate_on_patch
from .geometry import InfinitePatch
from .inclusion_field import InclusionGrid
from .kernels import ElasticMaterial
from .volume import VolumeOptions, volume_block

log = logging.getLogger(__name__)


class ModelError(ValueError):
    """Ill-posed or inconsistent model."""


@dataclass(frozen=True)
class PatchBC:
    """Boundary condition of one patch.

    ``kinds[d]`` is 'u' (prescribed displacement) or 't' (prescribed traction)
    for direction d with constant value ``values[d]``.  ``pressure`` adds a
    normal traction ``-p n``.
    """

    kinds: tuple = ("t", "t", "t")
    values: tuple = (0.0, 0.0, 0.0)
    pressure: float = 0.0

    def __post_init__(self):
        if len(self.kinds) != 3 or any(k not in ("u", "t") for k in self.kinds):
            raise ModelError("boundary condition kinds must be three of 'u'/'t'")
        if self.pressure and any(k == "u" for k in self.kinds):
            raise ModelError("pressure can only be combined with traction conditions")

    def traction(self):
        tv = np.array([v if k == "t" else 0.0 for k, v in zip(self.kinds, self.values)], float)
        p = float(self.pressure)
        if not p and not tv.any():
            return None
        return lambda x, n: np.broadcast_to(tv, x.shape) - p * n


@dataclass
class Model:
    patches: list
    bcs: list
    material: ElasticMaterial
    grids: list = field(default_factory=list)
    infinite: bool = False
    volume: VolumeOptions = field(default_factory=VolumeOptions)
    name: str = ""

    def __post_init__(self):
        if len(self.patches) != len(self.bcs):
            raise ModelError("one boundary condition per patch is required")
        for p, bc in zip(self.patches, self.bcs):
            if isinstance(p, InfinitePatch) and "u" in bc.kinds:
                raise ModelError("infinite patches only accept traction or pressure conditions")


@dataclass
class DofMap:
    nodes: np.ndarray           # (N, 3) node coordinates
    patch_nodes: list           # per patch: node id of each field basis function
    node_params: list           # per node: list of (patch index, (u, v))
    u_known: np.ndarray         # (N, 3) bool
    u_value: np.ndarray         # (N, 3)
    u_index: np.ndarray         # (N, 3) column of unknown displacement or -1
    t_index: list               # per patch: (n_field, 3) column of unknown traction or -1
    n_unknown: int

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


@dataclass
class SystemMatrices:
    L: np.ndarray
    r: np.ndarray
    B0: np.ndarray
    A_hat: np.ndarray
    c_bar: np.ndarray
    B0_bar: np.ndarray
    dofs: DofMap
    grid_offsets: list
    timings: dict = field(default_factory=dict)

    @property
    def n_sigma(self) -> int:
        return self.B0.shape[1]


def _scale(model: Model) -> float:
    pts = [p.surface.control.reshape(-1, 3) for p in model.patches if not isinstance(p, InfinitePatch)]
    pts += [p.p1 for p in model.patches if isinstance(p, InfinitePatch)]
    P = np.vstack(pts)
    return float(max(np.ptp(P, axis=0).max(), 1e-12))


def build_dofs(model: Model) -> DofMap:
    """Merge anchors into nodes and classify displacement/traction unknowns."""
    tol = 1e-8 * _scale(model)
    nodes: list = []
    patch_nodes = []
    for p in model.patches:
        ids = []
        for x in p.anchor_points():
            hit = [i for i, q in enumerate(nodes) if np.linalg.norm(q - x) < tol]
            if hit:
                ids.append(hit[0])
            else:
                nodes.append(x)
                ids.append(len(nodes) - 1)
        patch_nodes.append(np.array(ids))
    nodes = np.array(nodes)
    node_params = []
    for x in nodes:
        entries = []
        for pi, p in enumerate(model.patches):
            uv = locate_on_patch(p, x)
            if uv is not None:
                entries.append((pi, tuple(uv)))
        if not entries:
            raise ModelError(f"node {x} not located on any patch")
        node_params.append(entries)
    N = len(nodes)
    u_known = np.zeros((N, 3), bool)
    u_value = np.zeros((N, 3))
    for n, entries in enumerate(node_params):
        for pi, _ in entries:
            bc = model.bcs[pi]
            for d in range(3):
                if bc.kinds[d] == "u":
                    u_known[n, d] = True
                    u_value[n, d] = bc.values[d]
    u_index = -np.ones((N, 3), int)
    col = 0
    for n in range(N):
        for d in range(3):
            if not u_known[n, d]:
                u_index[n, d] = col
                col += 1
    # one traction unknown per (node, direction): tractions are continuous
    # across patches sharing a node
    t_cols: dict = {}
    t_index = []
    for p, bc, ids in zip(model.patches, model.bcs, patch_nodes):
        ti = -np.ones((p.n_field, 3), int)
        for d in range(3):
            if bc.kinds[d] == "u":
                for k in range(p.n_field):
                    key = (int(ids[k]), d)
                    if key not in t_cols:
                        t_cols[key] = col
                        col += 1
                    ti[k, d] = t_cols[key]
        t_index.append(ti)
    if col != 3 * N:
        raise ModelError(f"ill-posed model: {col} unknowns for {3 * N} collocation equations")
    return DofMap(nodes, patch_nodes, node_params, u_known, u_value, u_index, t_index, col)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("IGABEM_THREADS", "1")))
    except ValueError:
        return 1


def _map_rows(fn, items):
    n = _threads()
    if n == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(n) as ex:
        return list(ex.map(fn, items))


def boundary_row(model: Model, dofs: DofMap, y, on_patches: dict, collocation: bool):
    """Coefficients of one source point on nodal displacements and tractions.

    Returns (Hu (3, 3N), Gt (3, n_unknown), load (3,)) such that the equation is
    ``Hu @ u_nodes = Gt_full @ t + load``; for interior points the free term
    is included in ``Hu`` as the identity on u(y) (handled by the caller).
    """
    N = dofs.n_nodes
    mat = model.material
    Hu = np.zeros((3, N, 3))
    Gt = np.zeros((3, dofs.n_unknown))
    load = np.zeros(3)
    c_free = np.eye(3) if (collocation and model.infinite) else np.zeros((3, 3))
    first = None
    for pi, (p, bc) in enumerate(zip(model.patches, model.bcs)):
        yp = on_patches.get(pi)
        want_G = "u" in bc.kinds
        res = integrate_patch(p, mat, y, yp, want_G, bc.traction())
        nid = dofs.patch_nodes[pi]
        np.add.at(Hu, (slice(None), nid), np.transpose(res.H, (0, 2, 1)))
        if res.Tsum is not None and collocation:
            c_free = c_free - res.Tsum
        if yp is not None and first is None:
            first = pi
        if res.G is not None:
            ti = dofs.t_index[pi]
            for d in range(3):
                cols = ti[:, d]
                m = cols >= 0
                Gt[:, cols[m]] += res.G[:, d, m]
        if res.load is not None:
            load += res.load
    if collocation:
        if first is None:
            raise ModelError("collocation point not on any patch")
        p0 = model.patches[first]
        uv = on_patches[first]
        R0 = p0.field_basis(np.array([uv[0]]), np.array([uv[1]]))[0]
        nid = dofs.patch_nodes[first]
        # c_free u(y), with u(y) interpolated on the first containing patch
        np.add.at(Hu, (slice(None), nid), np.einsum("ij,k->ikj", c_free, R0))
    return Hu.reshape(3, 3 * N), Gt, load


def _split_u(dofs: DofMap, Hu: np.ndarray):
    """Columns on unknown displacements and the known-displacement product."""
    rows = Hu.shape[0]
    A = np.zeros((rows, dofs.n_unknown))
    ui = dofs.u_index.ravel()
    m = ui >= 0
    A[:, ui[m]] += Hu[:, m]
    known = Hu[:, ~m] @ dofs.u_value.ravel()[~m]
    return A, known


def grid_offsets(grids) -> list:
    off, out = 0, []
    for g in grids:
        out.append(off)
        off += 6 * g.n
    return out


def volume_row(model: Model, y, exclude_self=None) -> np.ndarray:
    """Volume coupling of a source point with all grids, (3, n_sigma)."""
    blocks = []
    for g in model.grids:
        b = volume_block(g, model.material, y, model.volume)
        blocks.append(np.transpose(b, (0, 2, 1)).reshape(3, 6 * g.n))
    if not blocks:
        return np.zeros((3, 0))
    return np.hstack(blocks)


def collocate_boundary(model: Model, dofs: DofMap | None = None):
    """Boundary system ``L x = r`` and the volume coupling ``B0``."""
    dofs = dofs or build_dofs(model)

    def row(n):
        y = dofs.nodes[n]
        on = {pi: uv for pi, uv in dofs.node_params[n]}
        Hu, Gt, load = boundary_row(model, dofs, y, on, True)
        Au, known = _split_u(dofs, Hu)
        L = Au - Gt
        r = load - known
        return L, r, volume_row(model, y)

    rows = _map_rows(row, range(dofs.n_nodes))
    L = np.vstack([a for a, _, _ in rows])
    r = np.concatenate([b for _, b, _ in rows])
    B0 = np.vstack([c for _, _, c in rows])
    return L, r, B0, dofs


def locate_on_boundary(model: Model, x):
    """(patch index, params) of the first patch containing x, or None."""
    for pi, p in enumerate(model.patches):
        uv = locate_on_patch(p, x)
        if uv is not None:
            return pi, uv
    return None


def point_rows(model: Model, dofs: DofMap, points: np.ndarray):
    """Rows giving displacements at arbitrary points: (A (3m, nx), c (3m), B (3m, n_sigma))."""
    n_sig = sum(6 * g.n for g in model.grids)

    def row(x):
        hit = locate_on_boundary(model, x)
        if hit is not None:
            pi, uv = hit
            p = model.patches[pi]
            Rk = p.field_basis(np.array([uv[0]]), np.array([uv[1]]))[0]
            Hu = np.zeros((3, dofs.n_nodes, 3))
            for k, nid in enumerate(dofs.patch_nodes[pi]):
                Hu[:, nid, :] += Rk[k] * np.eye(3)
            A, known = _split_u(dofs, Hu.reshape(3, -1))
            return A, known, np.zeros((3, n_sig))
        Hu, Gt, load = boundary_row(model, dofs, x, {}, False)
        Au, known = _split_u(dofs, Hu)
        # u(x) = int U t - int T u + int E sigma0
        return Gt - Au, load - known, volume_row(model, x)

    rows = _map_rows(row, list(np.atleast_2d(points)))
    A = np.vstack([a for a, _, _ in rows])
    c = np.concatenate([b for _, b, _ in rows])
    B = np.vstack([b for _, _, b in rows])
    return A, c, B


def assemble_internal(model: Model, dofs: DofMap):
    """Displacement rows at all grid points: (A_hat, c_bar, B0_bar)."""
    if not model.grids:
        z = np.zeros((0, dofs.n_unknown))
        return z, np.zeros(0), np.zeros((0, 0))
    pts = np.vstack([g.points for g in model.grids])
    return point_rows(model, dofs, pts)


def assemble_B0(model: Model, dofs: DofMap) -> np.ndarray:
    return np.vstack([volume_row(model, y) for y in dofs.nodes])


def assemble(model: Model) -> SystemMatrices:
    t0 = time.perf_counter()
    dofs = build_dofs(model)
    t1 = time.perf_counter()
    L, r, B0, _ = collocate_boundary(model, dofs)
    t2 = time.perf_counter()
    A_hat, c_bar, B0_bar = assemble_internal(model, dofs)
    t3 = time.perf_counter()
    timings = {"dofs": t1 - t0, "boundary": t2 - t1, "internal": t3 - t2}
    log.info("assembled %d dof, %d sigma components in %.2fs", dofs.n_unknown, B0.shape[1], t3 - t0)
    return SystemMatrices(L, r, B0, A_hat, c_bar, B0_bar, dofs, grid_offsets(model.grids), timings)
