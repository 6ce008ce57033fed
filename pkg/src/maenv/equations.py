"""Monge-Ampère equations on the torus and the constructions built on them.

The basic equation is semilinear in one complex dimension,

    theta + curvature(phi) = exp(beta * phi) * mu,        beta > 0,

with a unique solution for any nonzero measure density mu (the nonlinearity
is strictly monotone).  On top of the solvers this module provides:

* ``solve_two_measure``  -- the two-term equation whose large-beta limit is
  the envelope of the pointwise minimum of two potentials;
* ``pmin_compose``       -- that envelope itself, with the partition-defect
  field certifying ma(phi) <= 1_{phi=u} ma(u) + 1_{phi=v} ma(v);
* ``supersolution_check`` / ``subsolution_check`` -- one-sided residuals;
* ``perron_solve``       -- the envelope of a family of supersolutions,
  folded two at a time, which descends to the equation's solution;
* ``glue_supersolution`` -- replacing a supersolution on a sub-region by a
  local one and restoring global admissibility with an envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._newton import SolverReport, newton_semilinear
from .errors import (
    BoundaryTraceViolation,
    DegenerateData,
    FamilyExhausted,
    InputNotSupersolution,
    NoSubsolution,
)
from .obstacle import ObstacleSolution, psor_envelope
from .torus import (
    GridField,
    MeasureDensity,
    ThetaDensity,
    integrate,
    ma_density,
)

__all__ = [
    "ResidualReport",
    "PminResult",
    "PerronRound",
    "GlueResult",
    "SupersolutionFamily",
    "solve_ma_exponential",
    "solve_ma_exponential_local",
    "solve_two_measure",
    "pmin_compose",
    "supersolution_check",
    "subsolution_check",
    "perron_solve",
    "glue_supersolution",
]


def solve_ma_exponential(
    theta: ThetaDensity,
    mu: MeasureDensity,
    beta: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 80,
    init: GridField | None = None,
):
    """Solve theta + curvature(phi) = exp(beta*phi) * mu by damped Newton.

    Returns ``(GridField, SolverReport)``.  The equation has a unique
    solution for beta > 0; the default start is the constant balancing the
    total masses, log(V / mu_total) / beta.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    grid = theta.grid
    if init is None:
        c = np.log(theta.total_mass / mu.total_mass) / beta
        u0 = np.full((grid.n, grid.n), c)
    else:
        u0 = init.values
    zero = np.zeros((grid.n, grid.n))
    phi, report = newton_semilinear(
        theta.density.values,
        [(float(beta), zero, mu.density.values)],
        u0,
        tol=tol,
        max_iter=max_iter,
    )
    return GridField(grid, phi), report


def solve_ma_exponential_local(
    theta: ThetaDensity,
    mu: MeasureDensity,
    region_mask: np.ndarray,
    boundary: GridField,
    beta: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 80,
):
    """Dirichlet variant: solve the exponential equation on masked sites only.

    Off-mask sites keep the values of ``boundary``; the Newton matrix
    restricted to the mask is an M-matrix regardless of mu there, so the
    local problem is well posed even where the measure vanishes.
    """
    grid = theta.grid
    mask = np.asarray(region_mask, dtype=bool)
    if mask.shape != (grid.n, grid.n):
        raise ValueError("region mask shape mismatch")
    if not mask.any():
        raise ValueError("region mask selects no sites")
    zero = np.zeros((grid.n, grid.n))
    phi, report = newton_semilinear(
        theta.density.values,
        [(float(beta), zero, mu.density.values)],
        boundary.values,
        tol=tol,
        max_iter=max_iter,
        free_mask=mask,
    )
    return GridField(grid, phi), report


def solve_two_measure(
    theta: ThetaDensity,
    u: GridField,
    v: GridField,
    beta: float,
    tol: float = 1e-10,
    max_iter: int = 120,
    init: GridField | None = None,
):
    """Solve theta + curvature(phi) = e^{beta(phi-u)} ma_+(u) + e^{beta(phi-v)} ma_+(v).

    The Monge-Ampère densities of u and v are clipped at zero so the data
    stays nonnegative (discrete curvature of a merely tol-admissible field
    can dip slightly below zero).  Large beta is reached by a geometric
    continuation with warm starts; the limit is the envelope of min(u, v).

    Returns ``(GridField, SolverReport)`` for the final beta.  Raises
    :class:`DegenerateData` when both clipped densities vanish identically.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    grid = theta.grid
    a = np.maximum(ma_density(theta, u).values, 0.0)
    b = np.maximum(ma_density(theta, v).values, 0.0)
    if a.max() == 0.0 and b.max() == 0.0:
        raise DegenerateData("both Monge-Ampère densities vanish identically")

    betas = [float(beta)]
    while betas[0] > 16.0:
        betas.insert(0, betas[0] / 4.0)
    phi = init.values if init is not None else np.minimum(u.values, v.values) - np.log(2.0) / betas[0]
    report = None
    for bk in betas:
        phi, report = newton_semilinear(
            theta.density.values,
            [(bk, u.values, a), (bk, v.values, b)],
            phi,
            tol=tol,
            max_iter=max_iter,
        )
    return GridField(grid, phi), report


# ---------------------------------------------------------------------------
# envelope of a minimum and the partition inequality
# ---------------------------------------------------------------------------


@dataclass
class PminResult:
    """P(min(u,v)) together with the partition-defect certificate."""

    phi: GridField
    partition_defect: GridField
    mask_u: np.ndarray
    mask_v: np.ndarray
    max_defect: float
    l1_defect: float
    contact_tol: float
    solution: ObstacleSolution


def pmin_compose(
    theta: ThetaDensity,
    u: GridField,
    v: GridField,
    contact_tol: float | None = None,
    psor_tol: float = 1e-10,
    **psor_kwargs,
) -> PminResult:
    """Envelope of min(u, v) and the defect of the partition inequality.

    The defect field is ma(phi) - [1_{phi=u} ma(u) + 1_{phi=v} ma(v)] with the
    contact masks taken at ``contact_tol``; its positive part is at solver
    scale for admissible u, v, while its L1 norm shrinks linearly with the
    grid spacing (the detachment ring carries O(h) mass).
    """
    grid = theta.grid
    obstacle = GridField(grid, np.minimum(u.values, v.values))
    sol = psor_envelope(theta, obstacle, tol=psor_tol, **psor_kwargs)
    phi = sol.u
    if contact_tol is None:
        contact_tol = 1e-6 * (1.0 + float(np.abs(obstacle.values).max()))
    mask_u = phi.values >= u.values - contact_tol
    mask_v = phi.values >= v.values - contact_tol
    claimed = mask_u * ma_density(theta, u).values + mask_v * ma_density(theta, v).values
    defect = ma_density(theta, phi).values - claimed
    dfield = GridField(grid, defect)
    return PminResult(
        phi,
        dfield,
        mask_u,
        mask_v,
        float(defect.max()),
        float(np.abs(defect).sum()) * grid.h**2,
        contact_tol,
        sol,
    )


# ---------------------------------------------------------------------------
# one-sided residual checks
# ---------------------------------------------------------------------------


@dataclass
class ResidualReport:
    """Signed worst-case residual of a one-sided equation check."""

    passed: bool
    residual: float
    worst_site: tuple
    tol: float
    side: str


def _signed_check(values: np.ndarray, tol: float, side: str) -> ResidualReport:
    worst = int(values.argmax())
    residual = float(values.flat[worst])
    return ResidualReport(
        residual <= tol,
        residual,
        tuple(np.unravel_index(worst, values.shape)),
        tol,
        side,
    )


def supersolution_check(
    theta: ThetaDensity, psi: GridField, mu: MeasureDensity, tol: float = 1e-8
) -> ResidualReport:
    """max over the grid of ma_density(theta, psi) - e^psi * mu; passes when <= tol."""
    values = ma_density(theta, psi).values - np.exp(psi.values) * mu.density.values
    return _signed_check(values, tol, "supersolution")


def subsolution_check(
    theta: ThetaDensity, u: GridField, mu: MeasureDensity, tol: float = 1e-8
) -> ResidualReport:
    """max over the grid of e^u * mu - ma_density(theta, u); passes when <= tol."""
    values = np.exp(u.values) * mu.density.values - ma_density(theta, u).values
    return _signed_check(values, tol, "subsolution")


# ---------------------------------------------------------------------------
# the envelope of supersolutions
# ---------------------------------------------------------------------------


class SupersolutionFamily:
    """A validated collection of supersolutions of one exponential equation.

    Members may be supplied up front or drawn lazily from a generator
    (an iterator of GridFields); every candidate must pass
    :func:`supersolution_check` at ``residual_tol`` or it is rejected with
    :class:`InputNotSupersolution`.
    """

    def __init__(self, theta, mu, members=(), generator=None, residual_tol=1e-8):
        self.theta = theta
        self.mu = mu
        self.generator = generator
        self.residual_tol = float(residual_tol)
        self.members: list[GridField] = []
        for psi in members:
            self.add(psi)

    def add(self, psi: GridField) -> GridField:
        report = supersolution_check(self.theta, psi, self.mu, self.residual_tol)
        if not report.passed:
            raise InputNotSupersolution(
                f"candidate member violates the supersolution bound by {report.residual:.3e}",
                report=report,
            )
        self.members.append(psi)
        return psi

    def draw(self) -> GridField | None:
        """Pull, validate and store the next generated member (None when spent)."""
        if self.generator is None:
            return None
        try:
            psi = next(self.generator)
        except StopIteration:
            self.generator = None
            return None
        return self.add(psi)

    def __len__(self):
        return len(self.members)


@dataclass
class PerronRound:
    round: int
    member_id: int
    sup_gap: float
    supersolution_residual: float
    equation_residual: float


def _equation_residual(theta, phi, mu):
    values = ma_density(theta, phi).values - np.exp(phi.values) * mu.density.values
    return float(np.abs(values).max())


def perron_solve(
    theta: ThetaDensity,
    mu: MeasureDensity,
    family: SupersolutionFamily,
    u0: GridField,
    equation_tol: float = 1e-6,
    subsolution_tol: float = 1e-8,
    max_members: int = 64,
    psor_tol: float = 1e-10,
):
    """Descend to the equation's solution by folding supersolutions.

    Starting from the first member, each further member psi is folded in as
    P(min(current, psi)); the partition inequality keeps every fold a
    supersolution, and the presence of a subsolution u0 (checked first,
    otherwise :class:`NoSubsolution`) bounds the descent from below.  The
    iteration stops once the two-sided equation residual drops under
    ``equation_tol``; running out of members first raises
    :class:`FamilyExhausted` with the residual gap and the best fold.

    Returns ``(GridField, [PerronRound])``.
    """
    sub = subsolution_check(theta, u0, mu, subsolution_tol)
    if not sub.passed:
        raise NoSubsolution(
            f"u0 violates the subsolution bound by {sub.residual:.3e}"
        )
    if len(family) == 0 and family.draw() is None:
        raise ValueError("family has no members and the generator is spent")

    history: list[PerronRound] = []
    current: GridField | None = None
    k = 0
    while k < max_members:
        if k < len(family.members):
            psi = family.members[k]
        else:
            psi = family.draw()
            if psi is None:
                break
        if current is None:
            current = psi
            gap = float("inf")
        else:
            folded = pmin_compose(theta, current, psi, psor_tol=psor_tol).phi
            gap = float(np.abs(folded.values - current.values).max())
            current = folded
        res_super = supersolution_check(theta, current, mu, equation_tol).residual
        res_eq = _equation_residual(theta, current, mu)
        history.append(PerronRound(k, k, gap, res_super, res_eq))
        k += 1
        if res_eq <= equation_tol:
            return current, history
    raise FamilyExhausted(
        f"folded {k} members, equation residual {history[-1].equation_residual:.3e}",
        gap=history[-1].equation_residual,
        best=current,
    )


# ---------------------------------------------------------------------------
# gluing a local supersolution into a global one
# ---------------------------------------------------------------------------


@dataclass
class GlueResult:
    envelope: GridField
    spliced: GridField
    check: ResidualReport
    ring_min: float


def glue_supersolution(
    theta: ThetaDensity,
    u_global: GridField,
    v_local: GridField,
    region_mask: np.ndarray,
    mu: MeasureDensity,
    trace_tol: float = 1e-8,
    psor_tol: float = 1e-10,
    check_tol: float = 1e-7,
) -> GlueResult:
    """Splice v_local over the masked region into u_global and re-envelope.

    The trace condition v_local >= u_global on the region's inner boundary
    ring is required (:class:`BoundaryTraceViolation` otherwise); it makes
    the splice lower-semicontinuous from inside, so its envelope remains a
    supersolution.  The returned check reports the supersolution residual of
    the envelope.
    """
    grid = theta.grid
    mask = np.asarray(region_mask, dtype=bool)
    if mask.shape != (grid.n, grid.n):
        raise ValueError("region mask shape mismatch")
    if not mask.any():
        raise ValueError("region mask selects no sites")

    outside = ~mask
    ring = mask & (
        np.roll(outside, 1, 0)
        | np.roll(outside, -1, 0)
        | np.roll(outside, 1, 1)
        | np.roll(outside, -1, 1)
    )
    if ring.any():
        ring_min = float((v_local.values - u_global.values)[ring].min())
        if ring_min < -trace_tol:
            raise BoundaryTraceViolation(
                f"local field undercuts the global one by {-ring_min:.3e} on the boundary ring"
            )
    else:
        ring_min = float("inf")

    spliced = GridField(grid, np.where(mask, v_local.values, u_global.values))
    env = psor_envelope(theta, spliced, tol=psor_tol).u
    check = supersolution_check(theta, env, mu, check_tol)
    return GlueResult(env, spliced, check, ring_min)
