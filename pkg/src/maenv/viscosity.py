"""Pointwise viscosity-type verification and the supersolution-to-envelope pipeline.

A field v is accepted as a discrete supersolution of

    (theta + dd^c v)_+ <= e^v f        (or <= f with exponential=False)

when the inequality holds at every site after replacing v by its
inf-convolution: the second differences of a general field carry no
one-sided information at downward kinks, and inf-convolution is exactly the
semiconvex regularization that preserves supersolutions.  Sites where the
regularization is inactive are checked on the raw field; their fraction is
reported.

``supersolution_envelope_pipeline`` then certifies the structural theorem
this package is organized around: the envelope P(v) of a viscosity
supersolution satisfies the same inequality in the pluripotential
(equation-residual) sense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputNotSupersolution
from .obstacle import ObstacleSolution, psor_envelope
from .torus import (
    GridField,
    ThetaDensity,
    curvature,
    inf_convolution,
    integrate,
    is_theta_psh,
)

__all__ = [
    "ViscosityReport",
    "PipelineResult",
    "check_supersolution_visc",
    "check_subsolution_visc",
    "supersolution_envelope_pipeline",
    "mass_bound_check",
    "refined_semicontinuity_check",
]


@dataclass
class ViscosityReport:
    passed: bool
    worst_site: tuple
    worst_margin: float
    checked_fraction: float
    j_ic: float | None
    tol: float


def _validate_weight(f: GridField):
    if np.any(f.values < 0):
        raise ValueError("the density f must be nonnegative")


def check_supersolution_visc(
    theta: ThetaDensity,
    v: GridField,
    f: GridField,
    tol: float = 1e-8,
    j_ic: float | None = None,
    exponential: bool = True,
) -> ViscosityReport:
    """Test (theta + curvature(v))_+ <= e^v f + tol at every site.

    The field is first inf-convolved at strength ``j_ic`` (default: one
    smoothing length per cell, j_ic = N); margins are evaluated on the
    regularized field everywhere, and ``checked_fraction`` reports where the
    regularization was inactive.  With ``exponential=False`` the right-hand
    side is f alone.
    """
    _validate_weight(f)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    grid = theta.grid
    if j_ic is None:
        j_ic = float(grid.n)
    v_reg = inf_convolution(v, j_ic)
    scale = 1.0 + float(np.abs(v.values).max())
    inactive = v_reg.values >= v.values - 1e-12 * scale
    lhs = np.maximum(theta.density.values + curvature(v_reg).values, 0.0)
    rhs = f.values * (np.exp(v_reg.values) if exponential else 1.0)
    margin = rhs - lhs
    worst = int(margin.argmin())
    worst_margin = float(margin.flat[worst])
    return ViscosityReport(
        worst_margin >= -tol,
        tuple(np.unravel_index(worst, margin.shape)),
        worst_margin,
        float(inactive.mean()),
        j_ic,
        tol,
    )


def check_subsolution_visc(
    theta: ThetaDensity,
    u: GridField,
    f: GridField,
    tol: float = 1e-8,
    psh_tol: float = 1e-8,
    exponential: bool = True,
) -> ViscosityReport:
    """Test theta + curvature(u) >= e^u f - tol, gated on u being theta-psh.

    Subsolutions of the degenerate equation are admissible potentials by
    definition, so a field failing the admissibility check fails here no
    matter how the inequality comes out.
    """
    _validate_weight(f)
    ok, psh_report = is_theta_psh(theta, u, psh_tol)
    lhs = theta.density.values + curvature(u).values
    rhs = f.values * (np.exp(u.values) if exponential else 1.0)
    margin = lhs - rhs
    worst = int(margin.argmin())
    worst_margin = float(margin.flat[worst])
    if not ok:
        return ViscosityReport(
            False, psh_report.argmin, psh_report.min_value, 1.0, None, tol
        )
    return ViscosityReport(
        worst_margin >= -tol,
        tuple(np.unravel_index(worst, margin.shape)),
        worst_margin,
        1.0,
        None,
        tol,
    )


@dataclass
class PipelineResult:
    envelope: GridField
    residual: float
    input_report: ViscosityReport
    solution: ObstacleSolution


def supersolution_envelope_pipeline(
    theta: ThetaDensity,
    v: GridField,
    f: GridField,
    visc_tol: float = 1e-8,
    psor_tol: float = 1e-9,
    j_ic: float | None = None,
) -> PipelineResult:
    """Envelope a viscosity supersolution and report its equation residual.

    The input must pass :func:`check_supersolution_visc` (otherwise
    :class:`InputNotSupersolution`); the output residual is

        max over the grid of ma_density(theta, P(v)) - e^{P(v)} f,

    which the structural theorem drives to zero with the grid.
    """
    report = check_supersolution_visc(theta, v, f, tol=visc_tol, j_ic=j_ic)
    if not report.passed:
        raise InputNotSupersolution(
            f"input violates the viscosity bound by {-report.worst_margin:.3e} "
            f"at site {report.worst_site}",
            report=report,
        )
    sol = psor_envelope(theta, v, tol=psor_tol)
    env = sol.u
    residual_field = (
        theta.density.values
        + curvature(env).values
        - np.exp(env.values) * f.values
    )
    return PipelineResult(env, float(residual_field.max()), report, sol)


def mass_bound_check(theta: ThetaDensity, f: GridField, tol: float = 1e-12) -> bool:
    """Whether integrate(f) >= V - tol: the solvability threshold.

    Densities below the volume admit no supersolution of
    (theta + dd^c u)_+ <= f — the positive part alone already carries total
    mass >= V — while any f at or above the threshold does.
    """
    _validate_weight(f)
    return bool(integrate(f) >= theta.total_mass - tol)


def refined_semicontinuity_check(v: GridField, tol: float = 1e-8) -> bool:
    """Flag isolated downward spikes: v(a) must not undercut all 8 neighbors.

    Supersolutions normalized by their essential lower limits satisfy
    v(a) >= liminf_{x -> a, x != a} v(x); on the grid the punctured-
    neighborhood liminf is the minimum over the 8 surrounding sites, so a
    site sitting strictly below all of them violates the normalization.
    """
    vals = v.values
    osc = float(vals.max() - vals.min())
    neighbor_min = np.full_like(vals, np.inf)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            np.minimum(
                neighbor_min, np.roll(np.roll(vals, dx, 0), dy, 1), out=neighbor_min
            )
    return bool(np.all(vals >= neighbor_min - tol * (1.0 + osc)))
