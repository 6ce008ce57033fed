"""Envelope solvers on the torus: projected SOR and exponential penalization.

Two independent routes to the same envelope:

* :func:`psor_envelope` solves the discrete linear complementarity problem

      u <= h,   theta + curvature(u) >= 0,   (h - u) * (theta + curvature(u)) = 0

  by red-black projected successive over-relaxation, warm-started from a
  coarse grid.  Its solution is the largest theta-psh field below the
  obstacle h (constraints optionally imposed only on a mask, which yields
  the envelope relative to a measure that vanishes elsewhere).

* :func:`penalized_step` solves the smooth penalized equation

      theta + curvature(phi) = exp(j * (phi - v)) * mu

  by damped Newton; :func:`penalized_envelope` runs a geometric schedule in
  the penalty strength j with warm starts.  As j grows the iterates descend
  to the envelope of v relative to mu, with the classical lower bound

      phi_j >= (1 - 1/j) * P(v) + phi_fixed / j + (-log j + inf v) / j

  where phi_fixed solves theta + curvature(phi) = exp(phi) * mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._newton import SolverReport, newton_semilinear
from .errors import EmptySupport, NonConvergence
from .torus import (
    GridField,
    MeasureDensity,
    ThetaDensity,
    TorusGrid,
    curvature_values,
    ma_density,
)

__all__ = [
    "ObstacleSolution",
    "PenalizationSchedule",
    "PenalizedEnvelope",
    "SolverReport",
    "psor_envelope",
    "envelope_mu",
    "penalized_step",
    "penalized_envelope",
    "lower_bound_slack",
    "orthogonality_defect",
]


@dataclass
class ObstacleSolution:
    """Envelope below an obstacle: field, contact set and complementarity data."""

    u: GridField
    contact_mask: np.ndarray
    complementarity_defect: float
    report: SolverReport
    contact_tol: float


def _neighbor_sum(u: np.ndarray) -> np.ndarray:
    return (
        np.roll(u, 1, axis=0)
        + np.roll(u, -1, axis=0)
        + np.roll(u, 1, axis=1)
        + np.roll(u, -1, axis=1)
    )


def _natural_residual(u, hproj, theta, h):
    w = theta + curvature_values(u, h)
    gap = hproj - u
    return float(np.abs(np.minimum(gap, w)).max()), w


def _prolong(uc: np.ndarray) -> np.ndarray:
    """Periodic bilinear interpolation onto the doubled grid."""
    n = uc.shape[0]
    uf = np.empty((2 * n, 2 * n))
    right = np.roll(uc, -1, axis=0)
    down = np.roll(uc, -1, axis=1)
    uf[0::2, 0::2] = uc
    uf[1::2, 0::2] = 0.5 * (uc + right)
    uf[0::2, 1::2] = 0.5 * (uc + down)
    uf[1::2, 1::2] = 0.25 * (uc + right + down + np.roll(right, -1, axis=1))
    return uf


def _psor_values(theta, hproj, tol, max_iter, omega, init):
    n = theta.shape[0]
    h = 1.0 / n
    if omega is None:
        omega = 2.0 / (1.0 + np.sin(np.pi * h))
    ctheta = 2.0 * np.pi * h * h * theta

    ii, jj = np.indices((n, n))
    red = (ii + jj) % 2 == 0
    black = ~red

    u = init.copy()
    np.minimum(u, hproj, out=u)
    history = []
    sweeps = 0
    check_every = 8
    while sweeps < max_iter:
        for color in (red, black):
            gs = 0.25 * (_neighbor_sum(u) + ctheta)
            cand = u + omega * (gs - u)
            np.minimum(cand, hproj, out=cand)
            u[color] = cand[color]
        sweeps += 1
        if sweeps % check_every == 0 or sweeps == max_iter:
            res, _ = _natural_residual(u, hproj, theta, h)
            history.append(res)
            if res <= tol:
                return u, sweeps, res, history, True
    res, _ = _natural_residual(u, hproj, theta, h)
    history.append(res)
    return u, sweeps, res, history, False


def psor_envelope(
    theta: ThetaDensity,
    obstacle: GridField,
    tol: float = 1e-9,
    max_iter: int = 200_000,
    omega: float | None = None,
    constraint_mask: np.ndarray | None = None,
    init: GridField | None = None,
    cascade: bool = True,
) -> ObstacleSolution:
    """Largest theta-psh field below the obstacle (projected SOR).

    The termination criterion is the sup norm of the natural residual
    ``min(obstacle - u, ma_density(theta, u))``, which controls feasibility,
    positivity and complementarity at once.  When ``constraint_mask`` is
    given, the obstacle is enforced only on masked nodes (envelope relative
    to a measure supported there); elsewhere the equation ma = 0 holds.

    Raises :class:`NonConvergence` (carrying the best iterate) if the sweep
    budget is exhausted.
    """
    grid = theta.grid
    if obstacle.grid.n != grid.n:
        raise ValueError("obstacle and theta grids differ")
    th = theta.density.values
    hproj = obstacle.values.copy()
    if constraint_mask is not None:
        mask = np.asarray(constraint_mask, dtype=bool)
        if mask.shape != hproj.shape:
            raise ValueError("constraint mask shape mismatch")
        if not mask.any():
            raise EmptySupport("constraint mask is empty")
        hproj = np.where(mask, hproj, np.inf)
    else:
        mask = np.ones_like(hproj, dtype=bool)

    if init is not None:
        u0 = init.values.copy()
    elif cascade and grid.n > 64 and mask[::2, ::2].any():
        coarse = psor_envelope(
            ThetaDensity(GridField(TorusGrid(grid.n // 2), th[::2, ::2])),
            GridField(TorusGrid(grid.n // 2), obstacle.values[::2, ::2]),
            tol=max(tol, 1e-7),
            max_iter=max_iter,
            constraint_mask=mask[::2, ::2] if constraint_mask is not None else None,
            cascade=True,
        )
        u0 = _prolong(coarse.u.values)
    else:
        u0 = np.full_like(hproj, float(hproj[mask].min()))

    u, sweeps, res, history, ok = _psor_values(th, hproj, tol, max_iter, omega, u0)
    report = SolverReport("psor", sweeps, res, ok, history)
    contact_tol = 1e-6 * (1.0 + float(np.abs(obstacle.values[mask]).max()))
    w = th + curvature_values(u, grid.h)
    gap = np.where(mask, obstacle.values - u, 0.0)
    contact = mask & (gap <= contact_tol)
    defect = float((gap * w).sum()) * grid.h**2
    solution = ObstacleSolution(GridField(grid, u), contact, defect, report, contact_tol)
    if not ok:
        raise NonConvergence(
            f"projected SOR stalled at residual {res:.3e} after {sweeps} sweeps",
            best=solution,
            residual=res,
            iterations=sweeps,
        )
    return solution


def envelope_mu(
    theta: ThetaDensity,
    v: GridField,
    mu: MeasureDensity,
    tol: float = 1e-9,
    **kwargs,
) -> ObstacleSolution:
    """Envelope of v with the constraint u <= v imposed only on supp(mu)."""
    mask = mu.support_mask
    if not mask.any():
        raise EmptySupport("measure support is empty")
    return psor_envelope(theta, v, tol=tol, constraint_mask=mask, **kwargs)


# ---------------------------------------------------------------------------
# exponential penalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PenalizationSchedule:
    """Increasing penalty strengths; default doubles from 1 to 2**14."""

    js: tuple = tuple(float(2**k) for k in range(15))

    def __post_init__(self):
        js = tuple(float(j) for j in self.js)
        if not js or any(j <= 0 for j in js):
            raise ValueError("penalty strengths must be positive")
        if any(b <= a for a, b in zip(js, js[1:])):
            raise ValueError("penalty strengths must increase strictly")
        object.__setattr__(self, "js", js)


def penalized_step(
    theta: ThetaDensity,
    v: GridField,
    mu: MeasureDensity,
    j: float,
    init: GridField | None = None,
    tol: float = 1e-10,
    max_iter: int = 80,
):
    """Solve theta + curvature(phi) = exp(j*(phi - v)) * mu by damped Newton.

    The default initial guess is min(v, 0) smoothed by one Jacobi sweep, a
    subsolution-side start that keeps Newton in the monotone basin.  Returns
    ``(GridField, SolverReport)``.
    """
    if j <= 0:
        raise ValueError("penalty strength must be positive")
    grid = theta.grid
    th = theta.density.values
    if init is None:
        u0 = np.minimum(v.values, 0.0)
        u0 = 0.25 * (_neighbor_sum(u0) + 2.0 * np.pi * grid.h**2 * th)
    else:
        u0 = init.values
    phi, report = newton_semilinear(
        th, [(float(j), v.values, mu.density.values)], u0, tol=tol, max_iter=max_iter
    )
    return GridField(grid, phi), report


@dataclass
class PenalizedEnvelope:
    """Iterates and diagnostics of the penalization schedule."""

    js: tuple
    iterates: list
    sup_dists: list
    l1_dists: list
    slacks: list
    reports: list
    oracle: ObstacleSolution
    phi_fixed: GridField

    @property
    def final(self) -> GridField:
        return self.iterates[-1]


def penalized_envelope(
    theta: ThetaDensity,
    v: GridField,
    mu: MeasureDensity,
    schedule: PenalizationSchedule | None = None,
    oracle: ObstacleSolution | None = None,
    newton_tol: float = 1e-10,
    psor_tol: float = 1e-10,
) -> PenalizedEnvelope:
    """Warm-started penalization schedule with per-step diagnostics.

    Each step reports the sup/L1 distance to the obstacle-problem oracle
    (computed here once if not supplied) and the minimum slack of the lower
    bound, whose fixed field solves theta + curvature(phi) = exp(phi)*mu.
    """
    from .equations import solve_ma_exponential  # local import, no cycle at call time

    schedule = schedule or PenalizationSchedule()
    if oracle is None:
        oracle = envelope_mu(theta, v, mu, tol=psor_tol)
    phi_fixed, _ = solve_ma_exponential(theta, mu, beta=1.0, tol=newton_tol)
    inf_v = float(v.values.min())

    iterates, sups, l1s, slacks, reports = [], [], [], [], []
    current = None
    h2 = theta.grid.h**2
    for j in schedule.js:
        current, rep = penalized_step(theta, v, mu, j, init=current, tol=newton_tol)
        iterates.append(current)
        d = current.values - oracle.u.values
        sups.append(float(np.abs(d).max()))
        l1s.append(float(np.abs(d).sum() * h2))
        slacks.append(lower_bound_slack(current, oracle.u, phi_fixed, j, inf_v))
        reports.append(rep)
    return PenalizedEnvelope(
        schedule.js, iterates, sups, l1s, slacks, reports, oracle, phi_fixed
    )


def lower_bound_slack(
    phi_j: GridField, env: GridField, phi_fixed: GridField, j: float, inf_v: float
) -> float:
    """Minimum over the grid of phi_j minus its theoretical lower bound.

    The bound is (1 - 1/j) * env + phi_fixed / j + (-log j + inf_v) / j (one
    complex dimension).  Nonnegative up to solver tolerances.
    """
    bound = (
        (1.0 - 1.0 / j) * env.values
        + phi_fixed.values / j
        + (-np.log(j) + inf_v) / j
    )
    return float((phi_j.values - bound).min())


def orthogonality_defect(theta: ThetaDensity, h: GridField, env: GridField) -> float:
    """integrate((h - env) * ma_density(theta, env)).

    Vanishes (to solver tolerance) when env is the envelope of an obstacle
    continuous at grid scale; strictly positive defects appear for two-valued
    steps, where the envelope's measure charges the jump ring.  ``h`` should
    carry the plain function values; the envelope may have been computed from
    a lower-semicontinuous sampling of the same obstacle.
    """
    gap = h.values - env.values
    return float((gap * ma_density(theta, env).values).sum()) * theta.grid.h**2
