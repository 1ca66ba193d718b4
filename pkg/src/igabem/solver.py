"""Iterative and one-step solution of the coupled boundary/inclusion system."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import Model, SystemMatrices, point_rows
from .inclusion_field import initial_stress_operator

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Singular system or failed iteration."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


@dataclass(frozen=True)
class SolveOptions:
    scheme: str = "one-step"
    tol: float = 1e-6
    max_iter: int = 50
    block_form: bool = False

    def __post_init__(self):
        if self.scheme not in ("iterative", "one-step"):
            raise ValueError("scheme must be 'iterative' or 'one-step'")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tolerance must be positive and max_iter >= 1")


@dataclass
class GridState:
    u: np.ndarray          # (n_grid_total, 3)
    strain: np.ndarray     # (n_grid_total, 6) local
    sigma0: np.ndarray     # (n_grid_total, 6) local


@dataclass
class Solution:
    x: np.ndarray
    grid: GridState
    trace: list = field(default_factory=list)
    spectral_radius: float | None = None


def strain_operator(model: Model) -> np.ndarray:
    """Block-diagonal operator from grid displacements to local grid strains."""
    blocks = [g.grid_strain_operator() for g in model.grids]
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0))


def stress_operator(model: Model) -> np.ndarray:
    blocks = [initial_stress_operator(g, model.material) for g in model.grids]
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0))


def _lu(L):
    lu = sla.lu_factor(L, check_finite=True)
    d = np.abs(np.diag(lu[0]))
    if d.min() < 1e-13 * d.max():
        raise SolverError("singular boundary matrix L: ill-posed model")
    return lu


def _grid_state(sysm, Bh, Dp, x, sigma):
    u = sysm.A_hat @ x + sysm.c_bar + (sysm.B0_bar @ sigma if sigma.size else 0.0)
    eps = Bh @ u if Bh.size else np.zeros(0)
    sig = Dp @ eps if Dp.size else np.zeros(0)
    return u, eps, sig


def solve_iterative(sysm: SystemMatrices, model: Model, opts: SolveOptions = SolveOptions()) -> Solution:
    """Initial-stress iteration: L dx_i = B0 dsigma_i until ||dx|| / ||x|| < tol."""
    Bh, Dp = strain_operator(model), stress_operator(model)
    lu = _lu(sysm.L)
    x = sla.lu_solve(lu, sysm.r)
    sigma = np.zeros(sysm.n_sigma)
    trace = []
    rho = _spectral_radius(sysm, Bh, Dp, lu)
    for it in range(1, opts.max_iter + 1):
        _, _, sig_new = _grid_state(sysm, Bh, Dp, x, sigma)
        dsig = sig_new - sigma if sig_new.size else np.zeros(0)
        sigma = sig_new if sig_new.size else sigma
        dx = sla.lu_solve(lu, sysm.B0 @ dsig) if dsig.size else np.zeros_like(x)
        x = x + dx
        rel = float(np.linalg.norm(dx) / max(np.linalg.norm(x), 1e-300))
        trace.append({"iteration": it, "dx_norm": float(np.linalg.norm(dx)),
                      "max_dsigma": float(np.abs(dsig).max()) if dsig.size else 0.0, "rel": rel})
        if rel < opts.tol:
            u, eps, sig = _grid_state(sysm, Bh, Dp, x, sigma)
            return Solution(x, _pack(u, eps, sig), trace, rho)
        if not np.isfinite(rel) or (rho >= 1.0 and it >= 3 and rel > trace[-2]["rel"]):
            raise SolverError(f"iteration diverges at step {it} (spectral radius {rho:.3g} >= 1); "
                              "use the one-step scheme", trace)
    raise SolverError(f"no convergence in {opts.max_iter} iterations (spectral radius {rho:.3g})", trace)


def _pack(u, eps, sig) -> GridState:
    return GridState(np.asarray(u).reshape(-1, 3), np.asarray(eps).reshape(-1, 6),
                     np.asarray(sig).reshape(-1, 6))


def _spectral_radius(sysm, Bh, Dp, lu=None):
    """Spectral radius of the initial-stress iteration ``sigma -> G sigma``.

    ``G = D' Bh (A_hat L^-1 B0 + B0_bar)``: a stress increment changes the
    boundary solution through ``B0`` and the grid displacements through
    ``B0_bar``.  The iteration converges iff the radius is below one.
    """
    if not Dp.size:
        return 0.0
    lu = lu if lu is not None else _lu(sysm.L)
    G = Dp @ Bh @ (sysm.A_hat @ sla.lu_solve(lu, sysm.B0) + sysm.B0_bar)
    return float(np.abs(np.linalg.eigvals(G)).max())


def solve_onestep(sysm: SystemMatrices, model: Model, opts: SolveOptions = SolveOptions()) -> Solution:
    """Condensed solve ``(L - B0 D' A) x = r + B0 D' b``."""
    Bh, Dp = strain_operator(model), stress_operator(model)
    if not Dp.size:
        x = sla.lu_solve(_lu(sysm.L), sysm.r)
        return Solution(x, _pack(*_grid_state(sysm, Bh, Dp, x, np.zeros(0))), [], 0.0)
    if opts.block_form:
        return _solve_block(sysm, Bh, Dp)
    C = Bh @ sysm.A_hat
    C0 = Bh @ sysm.B0_bar
    cc = Bh @ sysm.c_bar
    M = np.eye(C0.shape[0]) - C0 @ Dp
    try:
        lu = sla.lu_factor(M)
    except (ValueError, sla.LinAlgError) as e:
        raise SolverError(f"stiffness contrast: I - C0 D' singular ({e})")
    d = np.abs(np.diag(lu[0]))
    if d.min() < 1e-13 * max(d.max(), 1.0):
        rho0 = float(np.abs(np.linalg.eigvals(C0 @ Dp)).max())
        raise SolverError(f"stiffness contrast: I - C0 D' singular (spectral radius {rho0:.3g})")
    rho = _spectral_radius(sysm, Bh, Dp)
    A = sla.lu_solve(lu, C)
    b = sla.lu_solve(lu, cc)
    K = sysm.L - sysm.B0 @ Dp @ A
    rhs = sysm.r + sysm.B0 @ Dp @ b
    x = sla.lu_solve(_lu(K), rhs)
    eps = A @ x + b
    sigma = Dp @ eps
    u = sysm.A_hat @ x + sysm.c_bar + sysm.B0_bar @ sigma
    return Solution(x, _pack(u, eps, sigma), [], rho)


def _solve_block(sysm, Bh, Dp) -> Solution:
    """Uncondensed system in (x, eps)::

        [ L          -B0 D'         ] [x  ]   [r  ]
        [ -Bh A_hat  I - Bh B0_bar D'] [eps] = [Bh c]
    """
    nx, ne = sysm.L.shape[0], Dp.shape[0]
    K = np.zeros((nx + ne, nx + ne))
    K[:nx, :nx] = sysm.L
    K[:nx, nx:] = -sysm.B0 @ Dp
    K[nx:, :nx] = -Bh @ sysm.A_hat
    K[nx:, nx:] = np.eye(ne) - Bh @ sysm.B0_bar @ Dp
    rhs = np.concatenate([sysm.r, Bh @ sysm.c_bar])
    z = np.linalg.solve(K, rhs)
    x, eps = z[:nx], z[nx:]
    sigma = Dp @ eps
    u = sysm.A_hat @ x + sysm.c_bar + sysm.B0_bar @ sigma
    return Solution(x, _pack(u, eps, sigma), [], None)


def solve(sysm: SystemMatrices, model: Model, opts: SolveOptions = SolveOptions()) -> Solution:
    if opts.scheme == "iterative":
        return solve_iterative(sysm, model, opts)
    return solve_onestep(sysm, model, opts)


def nodal_displacements(sysm: SystemMatrices, x: np.ndarray) -> np.ndarray:
    """Displacement coefficients at all nodes, (N, 3)."""
    d = sysm.dofs
    u = d.u_value.copy()
    m = d.u_index >= 0
    u[m] = x[d.u_index[m]]
    return u


def postprocess(model: Model, sysm: SystemMatrices, sol: Solution, points) -> np.ndarray:
    """Displacements at sample points, (m, 3); boundary points use patch interpolation."""
    A, c, B = point_rows(model, sysm.dofs, np.atleast_2d(points))
    u = A @ sol.x + c
    if B.size:
        u = u + B @ sol.grid.sigma0.ravel()
    return u.reshape(-1, 3)
