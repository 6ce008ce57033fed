"""Named analytic field families: obstacles, densities, and test corpora.

Everything here is a closed-form construction on a given grid — the runner
configs refer to these families by name, and the refinement studies rely on
the right-hand sides being analytic (so residuals measure discretization
alone, not data manufactured on the same grid).

The supersolution corpus builds pairs (v, f) satisfying

    (theta + dd^c v)_+ <= e^v f

with equality on the smooth contact regions, so the envelope pipeline's
residual is pure O(h^2) truncation error and shrinks under refinement:

* ``smooth_supersolution``   -- a cosine with its exact density;
* ``min_two_supersolution``  -- a transversal minimum of two cosines, f
  assembled branchwise with a one-cell inflation at the crossing;
* ``ramp_supersolution``     -- the quadratic ramp of a step (the value of
  min(step(y) + j|x-y|^2)) over a cosine background: convex junctions and
  one concave crease, the classic non-smooth supersolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .torus import GridField, MeasureDensity, ThetaDensity, TorusGrid, curvature_values

__all__ = [
    "SupersolutionDatum",
    "cosine_field",
    "theta_cosine",
    "mu_cosine",
    "step_band",
    "thin_column",
    "random_smooth_field",
    "random_theta_psh",
    "smooth_supersolution",
    "min_two_supersolution",
    "ramp_supersolution",
    "supersolution_corpus",
]


def cosine_field(
    grid: TorusGrid, amplitude: float, kx: int = 1, ky: int = 0, phase: float = 0.0
) -> GridField:
    """amplitude * cos(2*pi*(kx*x + ky*y) + phase)."""
    x, y = grid.coords()
    return GridField(
        grid, amplitude * np.cos(2.0 * np.pi * (kx * x + ky * y) + phase)
    )


def _cosine_curvature(grid, amplitude, kx=1, ky=0, phase=0.0) -> np.ndarray:
    """Exact curvature (Laplacian / 2pi) of the cosine above."""
    x, y = grid.coords()
    k2 = float(kx * kx + ky * ky)
    return (
        -2.0 * np.pi * k2 * amplitude * np.cos(2.0 * np.pi * (kx * x + ky * y) + phase)
    )


def theta_cosine(
    grid: TorusGrid, base: float = 1.0, amplitude: float = 0.0, kx: int = 1, ky: int = 0
) -> ThetaDensity:
    """Density base + amplitude*cos(2*pi*(kx*x + ky*y)); mean = base > 0."""
    x, y = grid.coords()
    return ThetaDensity(
        GridField(grid, base + amplitude * np.cos(2.0 * np.pi * (kx * x + ky * y)))
    )


def mu_cosine(
    grid: TorusGrid, base: float = 1.0, amplitude: float = 0.0, kx: int = 1, ky: int = 0
) -> MeasureDensity:
    """Nonnegative cosine-perturbed density (requires |amplitude| <= base)."""
    x, y = grid.coords()
    return MeasureDensity(
        GridField(grid, base + amplitude * np.cos(2.0 * np.pi * (kx * x + ky * y)))
    )


def step_band(grid: TorusGrid, x0: float, x1: float, depth: float = -1.0):
    """Two-valued obstacle on a band in x: (true values, lsc sampling).

    The true obstacle is ``depth`` strictly inside (x0, x1) and 0 at the edge
    samples; the lower-semicontinuous sampling extends ``depth`` to the
    closed band, which is the constraint set the envelope actually sees.
    Defect integrands use the true values, solvers the lsc ones.
    """
    if not 0.0 <= x0 < x1 <= 1.0:
        raise ValueError("band must satisfy 0 <= x0 < x1 <= 1")
    x, _ = grid.coords()
    open_band = (x > x0) & (x < x1)
    closed_band = (x >= x0) & (x <= x1)
    true_vals = np.where(open_band, depth, 0.0)
    lsc_vals = np.where(closed_band, depth, 0.0)
    return GridField(grid, true_vals), GridField(grid, lsc_vals)


def thin_column(grid: TorusGrid, x0: float = 0.5, depth: float = -1.0):
    """Obstacle lowered on a single grid column: the zero-area analog.

    Returns ``(field, mask)`` where the mask marks the column.  A density
    that vanishes exactly there gives no weight to the constraint, which is
    how a non-trivial set of Lebesgue measure zero is modelled on the grid.
    """
    x, _ = grid.coords()
    k = int(round(x0 * grid.n)) % grid.n
    mask = np.zeros((grid.n, grid.n), dtype=bool)
    mask[k, :] = True
    return GridField(grid, np.where(mask, depth, 0.0)), mask


def random_smooth_field(
    grid: TorusGrid, rng: np.random.Generator, modes: int = 3, amplitude: float = 1.0
) -> GridField:
    """Random low-frequency trigonometric polynomial, sup-norm ~ amplitude."""
    n = grid.n
    spec = np.zeros((n, n // 2 + 1), dtype=complex)
    for kx in range(-modes, modes + 1):
        for ky in range(0, modes + 1):
            if kx == 0 and ky == 0:
                continue
            re, im = rng.standard_normal(2)
            spec[kx % n, ky] = re + 1j * im
    vals = np.fft.irfft2(spec, s=(n, n)) * n * n
    peak = np.abs(vals).max()
    if peak > 0:
        vals *= amplitude / peak
    return GridField(grid, vals)


def random_theta_psh(
    theta: ThetaDensity,
    rng: np.random.Generator,
    modes: int = 3,
    margin: float = 0.9,
) -> GridField:
    """Random admissible field: a trig polynomial scaled into the theta-psh cone.

    Requires min(theta.density) > 0 (a strictly positive form); the scaling
    keeps ma_density >= (1 - margin) * min(theta) pointwise.
    """
    theta_min = float(theta.density.values.min())
    if theta_min <= 0:
        raise ValueError("random admissible fields need a strictly positive density")
    raw = random_smooth_field(theta.grid, rng, modes, 1.0)
    curv_min = float(curvature_values(raw.values, theta.grid.h).min())
    if curv_min >= 0:
        return raw
    scale = margin * theta_min / (-curv_min)
    return GridField(theta.grid, scale * raw.values)


# ---------------------------------------------------------------------------
# the supersolution corpus
# ---------------------------------------------------------------------------


@dataclass
class SupersolutionDatum:
    """One corpus member: the field, its analytic density, and a gate tolerance.

    ``gate_tol`` absorbs the two discretization effects of the pointwise
    check: O(h^2) truncation of the centered curvature on smooth regions,
    and the downward shift of inf-convolution preprocessing at strength
    j_ic = N, which moves any field with gradient g by up to g^2/(4 j_ic)
    and so lowers the right-hand side e^v f by that times its sup.
    """

    name: str
    v: GridField
    f: GridField
    gate_tol: float


def _gate_tol(grid: TorusGrid, grad_max: float, ef_max: float, trunc: float) -> float:
    """A-priori bound on the worst check margin for an equality-tight member."""
    shift = grad_max**2 / (4.0 * grid.n)
    return 2.0 * shift * ef_max + trunc + 1e-10


def _stencil_max(values: np.ndarray) -> np.ndarray:
    """Max over the 5-point stencil; inflates branchwise curvature data by
    one cell so junction sites are charged against the larger branch."""
    out = values.copy()
    for axis in (0, 1):
        for shift in (1, -1):
            np.maximum(out, np.roll(values, shift, axis=axis), out=out)
    return out


def smooth_supersolution(
    grid: TorusGrid, theta_value: float = 1.0, amplitude: float = 0.05
) -> SupersolutionDatum:
    """v = a*cos(2pi x), f = e^{-v}(theta + curvature(v)): exact equality."""
    if not 0 < 2.0 * np.pi * amplitude < theta_value:
        raise ValueError("amplitude too large for a positive density")
    v = cosine_field(grid, amplitude, 1, 0)
    c = _cosine_curvature(grid, amplitude, 1, 0)
    f = GridField(grid, np.exp(-v.values) * (theta_value + c))
    trunc = 2.0 * np.pi**3 * amplitude * grid.h**2
    ef_max = float(np.exp(v.values.max()) * f.values.max())
    tol = _gate_tol(grid, 2.0 * np.pi * amplitude, ef_max, trunc)
    return SupersolutionDatum("smooth", v, f, tol)


def min_two_supersolution(
    grid: TorusGrid,
    theta_value: float = 1.0,
    a1: float = 0.05,
    a2: float = 0.04,
    shift: float = 0.13,
) -> SupersolutionDatum:
    """v = min of two crossing cosines, f assembled from the active branch."""
    v1 = cosine_field(grid, a1, 1, 0)
    v2 = cosine_field(grid, a2, 0, 1, phase=2.0 * np.pi * shift)
    c1 = _cosine_curvature(grid, a1, 1, 0)
    c2 = _cosine_curvature(grid, a2, 0, 1, phase=2.0 * np.pi * shift)
    use1 = v1.values <= v2.values
    v = GridField(grid, np.where(use1, v1.values, v2.values))
    c_active = np.where(use1, c1, c2)
    f = GridField(grid, np.exp(-v.values) * (theta_value + _stencil_max(c_active)))
    if f.values.min() <= 0:
        raise ValueError("amplitudes too large for a positive density")
    trunc = 2.0 * np.pi**3 * max(a1, a2) * grid.h**2
    ef_max = float(np.exp(v.values.max()) * f.values.max())
    tol = _gate_tol(grid, 2.0 * np.pi * (a1 + a2), ef_max, trunc)
    return SupersolutionDatum("min-two-smooth", v, f, tol)


def ramp_supersolution(
    grid: TorusGrid,
    theta_value: float = 1.0,
    x0: float = 0.375,
    x1: float = 0.625,
    depth: float = 0.25,
    j_ramp: float = 4.0,
    amplitude: float = 0.03,
) -> SupersolutionDatum:
    """Quadratic ramp out of a step (value of min_y step(y) + j|x-y|^2) plus a cosine.

    The ramp meets the flat level in a concave crease (slope jump
    2*sqrt(j*depth)) and leaves the band through convex junctions; the
    density uses the stencil-inflated branch curvature, so the pointwise
    inequality holds with equality on the ramp's interior.
    """
    x, _ = grid.coords()
    t_star = float(np.sqrt(depth / j_ramp))
    if x0 - t_star <= 0 or x1 + t_star >= 1:
        raise ValueError("ramp leaves no flat region on the torus")
    dist = np.maximum.reduce([x0 - x, x - x1, np.zeros_like(x)])
    ramp = np.where(dist <= t_star, -depth + j_ramp * dist**2, 0.0)
    background = amplitude * np.cos(2.0 * np.pi * x)
    v = GridField(grid, ramp + background)
    c_branch = np.where(
        (dist > 0) & (dist <= t_star), 2.0 * j_ramp / (2.0 * np.pi), 0.0
    )
    c_branch = c_branch + _cosine_curvature(grid, amplitude, 1, 0)
    f = GridField(grid, np.exp(-v.values) * (theta_value + _stencil_max(c_branch)))
    if f.values.min() <= 0:
        raise ValueError("background too large for a positive density")
    grad_max = 2.0 * np.sqrt(j_ramp * depth) + 2.0 * np.pi * amplitude
    trunc = 2.0 * np.pi**3 * amplitude * grid.h**2
    ef_max = float(np.exp(v.values.max()) * f.values.max())
    tol = _gate_tol(grid, grad_max, ef_max, trunc)
    return SupersolutionDatum("ramp-step", v, f, tol)


def supersolution_corpus(grid: TorusGrid, theta_value: float = 1.0) -> list:
    """The three-member curated corpus at default parameters."""
    return [
        smooth_supersolution(grid, theta_value),
        min_two_supersolution(grid, theta_value),
        ramp_supersolution(grid, theta_value),
    ]
