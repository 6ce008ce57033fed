"""Damped-Newton core shared by the semilinear Monge-Ampère solvers.

Solves, for phi on the periodic grid,

    theta + curvature(phi) = sum_k exp(scale_k * (phi - offset_k)) * rho_k

with scale_k > 0 and rho_k >= 0.  The Jacobian of the right-hand side is a
nonnegative diagonal, so every Newton matrix

    diag(sum_k scale_k * e_k) - curvature_matrix

is a symmetric M-matrix; it is invertible whenever some rho_k is not
identically zero (full-grid case) or a Dirichlet mask pins the constant mode
(local case).  A backtracking line search on the squared residual norm keeps
the iteration inside the monotone basin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NewtonStall, NonConvergence
from .torus import laplacian_matrix

_EXP_CAP = 500.0  # cap on exponents; keeps overflow out of the line search

__all__ = ["SolverReport", "newton_semilinear"]


@dataclass
class SolverReport:
    """Iteration diagnostics shared by the solvers."""

    method: str
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)
    damping: list = field(default_factory=list)


def newton_semilinear(
    theta: np.ndarray,
    terms,
    init: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 80,
    free_mask: np.ndarray | None = None,
    method: str = "newton",
):
    """Damped Newton on the residual theta + curvature(phi) - sum_k exp(...)*rho_k.

    ``terms`` is a sequence of ``(scale, offset, rho)`` with offset and rho
    full-grid arrays.  When ``free_mask`` is given, only masked sites are
    unknowns and ``init`` supplies the Dirichlet values elsewhere.  Returns
    ``(values, SolverReport)``; raises :class:`NewtonStall` when the line
    search collapses and :class:`NonConvergence` on iteration exhaustion,
    both carrying the best iterate.
    """
    n = theta.shape[0]
    cmat = (laplacian_matrix(n) / (2.0 * np.pi)).tocsr()
    th = theta.ravel()
    flat_terms = [
        (float(s), np.asarray(off, dtype=float).ravel(), np.asarray(rho, dtype=float).ravel())
        for s, off, rho in terms
    ]
    phi = np.asarray(init, dtype=float).ravel().copy()
    idx = None if free_mask is None else np.flatnonzero(np.asarray(free_mask).ravel())
    if idx is not None and idx.size == 0:
        raise ValueError("free mask selects no unknowns")

    def residual(p):
        rhs = np.zeros_like(p)
        weight = np.zeros_like(p)
        for s, off, rho in flat_terms:
            e = np.exp(np.minimum(s * (p - off), _EXP_CAP)) * rho
            rhs += e
            weight += s * e
        g = th + cmat @ p - rhs
        if idx is not None:
            g = g[idx]
        return g, weight

    g, weight = residual(phi)
    merit = float(g @ g)
    history, damping = [], []
    it = 0
    while it < max_iter:
        res_inf = float(np.abs(g).max())
        history.append(res_inf)
        if res_inf <= tol:
            return phi.reshape(n, n), SolverReport(
                method, it, res_inf, True, history, damping
            )
        it += 1
        m = sp.diags(weight) - cmat
        if idx is not None:
            m = m.tocsr()[idx][:, idx]
        delta = spla.splu(m.tocsc()).solve(g)
        full_delta = delta
        if idx is not None:
            full_delta = np.zeros_like(phi)
            full_delta[idx] = delta
        step = 1.0
        stalled = False
        while True:
            g_new, weight_new = residual(phi + step * full_delta)
            merit_new = float(g_new @ g_new)
            if np.isfinite(merit_new) and (
                merit_new <= merit * (1.0 - 1e-4 * step) or merit_new <= tol * tol
            ):
                break
            step *= 0.5
            if step < 2.0**-20:
                # the search collapses only at the rounding floor of the
                # merit; close enough to the target is accepted, anything
                # else is a genuine stall
                if res_inf <= 1e3 * tol:
                    stalled = True
                    break
                raise NewtonStall(
                    f"no acceptable Newton step at residual {res_inf:.3e}",
                    best=phi.reshape(n, n),
                    residual=res_inf,
                    iterations=it,
                )
        if stalled:
            return phi.reshape(n, n), SolverReport(
                method, it, res_inf, res_inf <= tol, history, damping
            )
        damping.append(step)
        phi = phi + step * full_delta
        g, weight, merit = g_new, weight_new, merit_new
    res_inf = float(np.abs(g).max())
    raise NonConvergence(
        f"Newton used {max_iter} iterations, residual {res_inf:.3e}",
        best=phi.reshape(n, n),
        residual=res_inf,
        iterations=it,
    )
