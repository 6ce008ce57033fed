"""Named experiment scenarios: config parsing, execution, artifacts, manifests.

A scenario binds the library's solvers to a concrete reproducible experiment:
it reads a flat ``key = value`` config, runs the computation with a fixed
seed, writes CSV/JSON artifacts plus a ``manifest.json`` with content hashes
and per-check outcomes, and raises :class:`ScenarioFailure` when any check
fails (the manifest is still written, so failures are inspectable).

Determinism contract: identical config and seed produce byte-identical
artifacts.  Everything downstream of the seeded generator is deterministic,
floats are serialized at full precision, and manifests carry no timestamps.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .energy import (
    capacity,
    cap_convergence_metric,
    extremal_field,
    generalized_capacity,
    quasi_triangle_check,
)
from .equations import (
    SupersolutionFamily,
    perron_solve,
    pmin_compose,
    solve_ma_exponential,
)
from .errors import ConfigError, ScenarioFailure
from .fields import (
    random_smooth_field,
    random_theta_psh,
    step_band,
    supersolution_corpus,
    theta_cosine,
)
from .obstacle import penalized_envelope, PenalizationSchedule, psor_envelope, orthogonality_defect
from .radial import (
    TAxis,
    ball_step_obstacle,
    local_envelope_ball,
    measure_to_csv,
    orthogonality_defect_radial,
    radial_envelope,
    radial_ma_mass,
)
from .torus import GridField, MeasureDensity, TorusGrid, constant_field, ma_density
from .viscosity import check_supersolution_visc, mass_bound_check, supersolution_envelope_pipeline

__all__ = [
    "SCENARIOS",
    "ScenarioConfig",
    "Check",
    "RunManifest",
    "VerifySummary",
    "parse_config_text",
    "read_config",
    "run_scenario",
    "verify_all",
]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_COMMON_KEYS = {"scenario", "seed", "out"}

# per-scenario schema: key -> (type tag, default); types: i = int, f = float,
# fl = comma-separated float list
_SCHEMAS = {
    "radial-ball": {
        "m": ("i", 4096),
        "t_min": ("f", -40.0),
        "t_max": ("f", 40.0),
        "dims": ("fl", (1.0, 2.0, 3.0)),
        "sup_tol": ("f", 1e-6),
        "limit_tol": ("f", 1e-8),
        "atom_tol": ("f", 1e-6),
    },
    "penalized-convergence": {
        "n": ("i", 128),
        "j_max_log2": ("i", 14),
        "smooth_amp": ("f", 0.25),
        "obstacle_depth": ("f", -1.0),
        "obstacle_x0": ("f", 0.25),
        "obstacle_x1": ("f", 0.75),
        "newton_tol": ("f", 1e-10),
        "psor_tol": ("f", 1e-9),
        "cap_eps": ("f", 1e-2),
        "final_tol_factor": ("f", 1e-2),
        "slack_tol": ("f", 1e-8),
        "cap_tol_factor": ("f", 1e-3),
    },
    "orthogonality": {
        "n": ("i", 128),
        "count": ("i", 20),
        "psor_tol": ("f", 1e-9),
        "smooth_tol_factor": ("f", 1e-6),
        "step_floor_factor": ("f", 0.1),
        "step_drift": ("f", 0.2),
    },
    "min-principle": {
        "n": ("i", 128),
        "pairs": ("i", 20),
        "psor_tol": ("f", 1e-9),
        "defect_tol_factor": ("f", 1e-3),
        "halving_drift": ("f", 0.3),
    },
    "perron": {
        "n": ("i", 64),
        "equation_tol": ("f", 1e-6),
        "psor_tol": ("f", 1e-9),
        "gap_tol": ("f", 1e-3),
        "shuffle_tol": ("f", 2e-3),
    },
    "viscosity-pipeline": {
        "n": ("i", 128),
        "psor_tol": ("f", 1e-9),
        "residual_tol_factor": ("f", 1e-3),
    },
    "extremal-contact": {
        "n": ("i", 128),
        "theta_base": ("f", 1.0),
        "theta_amp": ("f", 2.0),
        "psor_tol": ("f", 1e-9),
        "flat_tol": ("f", 1e-6),
        "defect_tol_factor": ("f", 1e-6),
    },
    "capacity-sandwich": {
        "n": ("i", 32),
        "masks": ("i", 10),
        "t_values": ("fl", (1.0, 2.0, 5.0)),
        "psor_tol": ("f", 1e-9),
        "defect_tol": ("f", 1e-8),
    },
    "quasi-triangle": {
        "n": ("i", 64),
        "triples": ("i", 1000),
        "p_values": ("fl", (0.5, 1.0, 2.0)),
    },
    "local-envelopes": {
        "m": ("i", 4096),
    },
    "mass-bound": {
        "n": ("i", 64),
        "seeds": ("i", 1000),
        "visc_tol": ("f", 1e-8),
    },
}

SCENARIOS = tuple(sorted(_SCHEMAS))


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario configuration (typed parameters, canonical text)."""

    scenario: str
    seed: int
    params: dict
    out: str | None = None

    def canonical_text(self) -> str:
        lines = [f"scenario = {self.scenario}", f"seed = {self.seed}"]
        for key in sorted(self.params):
            val = self.params[key]
            if isinstance(val, tuple):
                val = ",".join(format(x, ".17g") for x in val)
            elif isinstance(val, float):
                val = format(val, ".17g")
            lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return ScenarioConfig(self.scenario, int(seed), self.params, self.out)


def _coerce(key: str, raw: str, kind: str):
    try:
        if kind == "i":
            return int(raw)
        if kind == "f":
            return float(raw)
        if kind == "fl":
            return tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise ConfigError(f"field {key!r}: cannot parse {raw!r} as {'int' if kind == 'i' else 'number(s)'}") from None
    raise ConfigError(f"field {key!r}: unknown kind {kind!r}")


def parse_config_text(text: str, scenario: str | None = None) -> ScenarioConfig:
    """Parse and validate a flat ``key = value`` config ('#' starts a comment).

    ``scenario`` may be supplied by the caller (CLI positional); when both
    are present they must agree.  Unknown keys, duplicate keys, type errors
    and nonpositive tolerances raise :class:`ConfigError` naming the field.
    """
    entries: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line.strip()!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key or not raw:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in entries:
            raise ConfigError(f"duplicate field {key!r}")
        entries[key] = raw

    name = entries.pop("scenario", None) or scenario
    if name is None:
        raise ConfigError("field 'scenario' is required (config key or CLI argument)")
    if scenario is not None and name != scenario:
        raise ConfigError(f"field 'scenario': config says {name!r}, command line says {scenario!r}")
    if name not in _SCHEMAS:
        raise ConfigError(f"field 'scenario': unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")

    seed_raw = entries.pop("seed", "0")
    seed = _coerce("seed", seed_raw, "i")
    out = entries.pop("out", None)

    schema = _SCHEMAS[name]
    params = {key: default for key, (kind, default) in schema.items()}
    for key, raw in entries.items():
        if key not in schema:
            raise ConfigError(f"field {key!r} is not valid for scenario {name!r}")
        params[key] = _coerce(key, raw, schema[key][0])
    for key, val in params.items():
        if key.endswith("_tol") or key.endswith("_tol_factor"):
            if not val > 0:
                raise ConfigError(f"field {key!r} must be positive, got {val!r}")
    return ScenarioConfig(name, seed, params, out)


def read_config(path, scenario: str | None = None) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text(), scenario)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


@dataclass
class Check:
    """One acceptance check: a named value against its threshold."""

    name: str
    passed: bool
    value: float
    threshold: float

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)
        self.threshold = float(self.threshold)


@dataclass
class RunManifest:
    scenario: str
    version: str
    config_sha256: str
    seed: int
    checks: list
    files: dict
    reports: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario,
            "version": self.version,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "files": self.files,
            "reports": self.reports,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class _Recorder:
    """Collects per-operation solver reports for the manifest."""

    def __init__(self):
        self.rows: list[dict] = []

    def add(self, op: str, report) -> None:
        self.rows.append(
            {
                "op": op,
                "method": report.method,
                "iterations": int(report.iterations),
                "residual": float(report.residual),
                "converged": bool(report.converged),
            }
        )


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _csv(header: str, rows) -> str:
    return "\n".join([header] + [",".join(_fmt(c) if not isinstance(c, str) else c for c in row) for row in rows]) + "\n"


# ---------------------------------------------------------------------------
# the scenarios
# ---------------------------------------------------------------------------


def _scn_radial_ball(p, seed, rec):
    axis = TAxis(p["t_min"], p["t_max"], p["m"])
    h, h_lsc = ball_step_obstacle(axis)
    profile = radial_envelope(h_lsc, axis)
    formula = np.maximum(
        0.5 * np.logaddexp(0.0, axis.ts) - 1.0,
        0.5 * axis.ts + 0.5 * np.log(2.0) - 1.0,
    )
    sup_err = float(np.abs(profile.values - formula).max())
    limit = float(profile.values[-1] - 0.5 * axis.ts[-1])
    checks = [
        Check("envelope_matches_max_formula", sup_err <= p["sup_tol"], sup_err, p["sup_tol"]),
        Check(
            "limit_value",
            abs(limit - (0.5 * np.log(2.0) - 1.0)) <= p["limit_tol"],
            limit,
            0.5 * np.log(2.0) - 1.0,
        ),
    ]
    files = {"envelope.csv": _csv(
        "t,envelope,formula",
        zip(axis.ts, profile.values, formula),
    )}
    atom_rows = []
    for nd in p["dims"]:
        nd = int(nd)
        measure = radial_ma_mass(profile, nd)
        atoms = [(t, m) for t, m in measure.atoms if abs(t) <= 2 * axis.dt]
        atom_mass = sum(m for _, m in atoms)
        expected = 1.0 - 2.0**-nd
        defect = orthogonality_defect_radial(h, axis, nd, solver_h=h_lsc)
        checks.append(Check(f"atom_mass_n{nd}", abs(atom_mass - expected) <= p["atom_tol"], atom_mass, expected))
        checks.append(Check(f"orthogonality_defect_n{nd}", abs(defect - expected) <= p["atom_tol"], defect, expected))
        atom_rows.append((nd, atom_mass, expected, defect))
        if nd == 1:
            files["measure_n1.csv"] = measure_to_csv(measure)
    files["atoms.csv"] = _csv("n,atom_mass,expected,orthogonality_defect", atom_rows)
    return checks, files


def _mixture_obstacle(grid, p):
    """Smooth + step mixture: a cosine capped by a band-shaped drop."""
    x, _ = grid.coords()
    smooth = p["smooth_amp"] * np.cos(2.0 * np.pi * x) + 0.1
    _, lsc = step_band(grid, p["obstacle_x0"], p["obstacle_x1"], p["obstacle_depth"])
    return GridField(grid, np.minimum(smooth, lsc.values))


def _scn_penalized_convergence(p, seed, rec):
    grid = TorusGrid(p["n"])
    theta = theta_cosine(grid, 1.0)
    v = _mixture_obstacle(grid, p)
    mu = MeasureDensity(constant_field(grid, 1.0))
    schedule = PenalizationSchedule(tuple(float(2**k) for k in range(p["j_max_log2"] + 1)))
    run = penalized_envelope(
        theta, v, mu, schedule, newton_tol=p["newton_tol"], psor_tol=p["psor_tol"]
    )
    for j, rep in zip(run.js, run.reports):
        rec.add(f"penalized_step[j={j:g}]", rep)
    rec.add("envelope_oracle", run.oracle.report)

    vol = theta.total_mass
    final_tol = p["final_tol_factor"] * (1.0 + float(np.abs(v.values).max()))
    caps = cap_convergence_metric(theta, run.iterates, run.oracle.u, p["cap_eps"], psor_tol=p["psor_tol"])
    checks = [
        Check("final_sup_distance", run.sup_dists[-1] <= final_tol, run.sup_dists[-1], final_tol),
        Check("lower_bound_min_slack", min(run.slacks) >= -p["slack_tol"], min(run.slacks), -p["slack_tol"]),
        Check(
            "final_capacity_metric",
            caps[-1] <= p["cap_tol_factor"] * vol,
            caps[-1],
            p["cap_tol_factor"] * vol,
        ),
    ]
    files = {
        "convergence.csv": _csv(
            "j,sup_dist,l1_dist,min_slack,newton_iters,capacity_metric",
            [
                (j, s, l1, sl, float(rep.iterations), c)
                for j, s, l1, sl, rep, c in zip(
                    run.js, run.sup_dists, run.l1_dists, run.slacks, run.reports, caps
                )
            ],
        )
    }
    return checks, files


def _scn_orthogonality(p, seed, rec):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(p["n"])
    theta = theta_cosine(grid, 1.0)
    vol = theta.total_mass
    rows, worst = [], 0.0
    for k in range(p["count"]):
        h = random_smooth_field(grid, rng, modes=3, amplitude=float(rng.uniform(0.2, 1.0)))
        sol = psor_envelope(theta, h, tol=p["psor_tol"])
        d = orthogonality_defect(theta, h, sol.u)
        worst = max(worst, abs(d))
        rows.append(("smooth", float(k), d))
    step_defects = {}
    for n in (p["n"], 2 * p["n"]):
        g = TorusGrid(n)
        th = theta_cosine(g, 1.0)
        true_vals, lsc_vals = step_band(g, 0.25, 0.75, -1.0)
        sol = psor_envelope(th, lsc_vals, tol=p["psor_tol"])
        step_defects[n] = orthogonality_defect(th, true_vals, sol.u)
        rows.append(("step", float(n), step_defects[n]))
    ratio = step_defects[2 * p["n"]] / step_defects[p["n"]]
    tol = p["smooth_tol_factor"] * vol
    checks = [
        Check("smooth_defects_vanish", worst <= tol, worst, tol),
        Check(
            "step_defect_floor",
            step_defects[p["n"]] >= p["step_floor_factor"] * vol,
            step_defects[p["n"]],
            p["step_floor_factor"] * vol,
        ),
        Check(
            "step_defect_stable",
            1.0 - p["step_drift"] <= ratio <= 1.0 + p["step_drift"],
            ratio,
            p["step_drift"],
        ),
    ]
    return checks, {"defects.csv": _csv("kind,id,defect", rows)}


def _crossing_pair(theta, rng):
    """Two admissible fields crossing transversally (centered, comparable size)."""
    u = random_theta_psh(theta, rng)
    w = random_theta_psh(theta, rng)
    uc = u.values - u.values.mean()
    wc = w.values - w.values.mean()
    return GridField(theta.grid, uc), GridField(theta.grid, wc)


def _scn_min_principle(p, seed, rec):
    rng = np.random.default_rng(seed)
    vol = 1.0
    results = {}
    rows = []
    for n in (p["n"], 2 * p["n"]):
        grid = TorusGrid(n)
        theta = theta_cosine(grid, 1.0)
        pair_rng = np.random.default_rng(seed)  # same pairs at both resolutions
        max_defects, l1_defects = [], []
        for k in range(p["pairs"]):
            u, w = _crossing_pair(theta, pair_rng)
            res = pmin_compose(theta, u, w, psor_tol=p["psor_tol"])
            max_defects.append(res.max_defect)
            l1_defects.append(res.l1_defect)
            rows.append((float(n), float(k), res.max_defect, res.l1_defect))
        results[n] = (max(max_defects), max(l1_defects))
    fine_max, fine_l1 = results[2 * p["n"]]
    ratio = fine_l1 / results[p["n"]][1]
    tol = p["defect_tol_factor"] * vol
    lo, hi = 0.5 * (1 - p["halving_drift"]), 0.5 * (1 + p["halving_drift"])
    checks = [
        Check("max_partition_defect", fine_max <= tol, fine_max, tol),
        Check("l1_defect_halves", lo <= ratio <= hi, ratio, 0.5),
    ]
    return checks, {"partition.csv": _csv("n,pair,max_defect,l1_defect", rows)}


def _perron_configs(grid, x, y):
    """Five (theta-amplitude, mu-values) configurations, two with strict sub-mask support."""
    return [
        ("uniform", 0.0, np.ones_like(x)),
        ("cosine-x", 0.0, 1.0 + 0.5 * np.cos(2.0 * np.pi * x)),
        ("cosine-xy", 0.5, 1.5 + np.cos(2.0 * np.pi * (x + y))),
        ("half-plane", 0.0, np.where(x < 0.5, 2.0, 0.0)),
        ("disk", 0.0, np.where((x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.09, 3.0, 0.0)),
    ]


def _scn_perron(p, seed, rec):
    grid = TorusGrid(p["n"])
    x, y = grid.coords()
    rows, checks = [], []
    for tag, theta_amp, mu_vals in _perron_configs(grid, x, y):
        theta = theta_cosine(grid, 1.0, theta_amp)
        mu = MeasureDensity(GridField(grid, mu_vals))
        exact, rep = solve_ma_exponential(theta, mu)
        rec.add(f"exponential_solve[{tag}]", rep)
        members = []
        for frac in (0.25, 0.5, 0.75, 1.0):
            sel = (y < frac) & (mu_vals > 0)
            if not sel.any():
                continue
            restricted = np.where(sel, mu_vals, 0.0)
            psi, _ = solve_ma_exponential(theta, MeasureDensity(GridField(grid, restricted)))
            members.append(psi)
        supp = mu_vals > 0
        ratio_min = float((theta.density.values[supp] / mu_vals[supp]).min())
        u0 = constant_field(grid, float(np.log(ratio_min) - 0.1))
        fam = SupersolutionFamily(theta, mu, members=members)
        sol, hist = perron_solve(theta, mu, fam, u0, equation_tol=p["equation_tol"], psor_tol=p["psor_tol"])
        fam_r = SupersolutionFamily(theta, mu, members=list(reversed(members)))
        sol_r, _ = perron_solve(theta, mu, fam_r, u0, equation_tol=p["equation_tol"], psor_tol=p["psor_tol"])
        gap = float(np.abs(sol.values - exact.values).max())
        shuffle = float(np.abs(sol.values - sol_r.values).max())
        checks.append(Check(f"gap[{tag}]", gap <= p["gap_tol"], gap, p["gap_tol"]))
        checks.append(Check(f"shuffle[{tag}]", shuffle <= p["shuffle_tol"], shuffle, p["shuffle_tol"]))
        for h in hist:
            rows.append(
                (tag, float(h.round), float(h.member_id),
                 h.sup_gap if np.isfinite(h.sup_gap) else -1.0,
                 h.supersolution_residual, h.equation_residual)
            )
    files = {"perron_history.csv": _csv(
        "config,round,member_id,sup_gap,supersolution_residual,equation_residual", rows
    )}
    return checks, files


def _scn_viscosity_pipeline(p, seed, rec):
    vol = 1.0
    rows, checks = [], []
    residuals = {}
    for n in (p["n"] // 2, p["n"]):
        grid = TorusGrid(n)
        theta = theta_cosine(grid, 1.0)
        for datum in supersolution_corpus(grid):
            res = supersolution_envelope_pipeline(
                theta, datum.v, datum.f, visc_tol=datum.gate_tol, psor_tol=p["psor_tol"]
            )
            rec.add(f"pipeline[{datum.name},n={n}]", res.solution.report)
            rows.append(
                (datum.name, float(n), datum.gate_tol, res.input_report.worst_margin,
                 res.input_report.checked_fraction, res.residual)
            )
            residuals.setdefault(datum.name, {})[n] = res.residual
    tol = p["residual_tol_factor"] * vol
    for name, by_n in residuals.items():
        fine = by_n[p["n"]]
        coarse = by_n[p["n"] // 2]
        checks.append(Check(f"residual[{name}]", fine <= tol, fine, tol))
        checks.append(
            Check(f"residual_decreases[{name}]", abs(fine) < abs(coarse), abs(fine) / abs(coarse), 1.0)
        )
    files = {"pipeline.csv": _csv(
        "member,n,gate_tol,worst_margin,checked_fraction,residual", rows
    )}
    return checks, files


def _scn_extremal_contact(p, seed, rec):
    grid = TorusGrid(p["n"])
    theta = theta_cosine(grid, p["theta_base"], p["theta_amp"])
    vol = theta.total_mass
    sol = psor_envelope(theta, constant_field(grid, 0.0), tol=p["psor_tol"])
    rec.add("extremal_envelope", sol.report)
    vt = sol.u
    ma = ma_density(theta, vt).values
    flat = np.abs(vt.values) < p["flat_tol"]
    excess = float((ma - flat * np.maximum(theta.density.values, 0.0)).max())
    tol = p["defect_tol_factor"] * vol
    contact_fraction = float(flat.mean())
    checks = [
        Check("ma_concentrates_on_flat_positive_part", excess <= tol, excess, tol),
        Check("contact_band_nonempty", contact_fraction > 0.0, contact_fraction, 0.0),
    ]
    files = {
        "extremal.csv": _csv(
            "x,v_theta,ma,theta",
            [
                (i * grid.h, vt.values[i, 0], ma[i, 0], theta.density.values[i, 0])
                for i in range(grid.n)
            ],
        )
    }
    return checks, files


def _sandwich_masks(grid, count, rng):
    x, y = grid.coords()
    masks = [x < 0.25, (x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.04]
    while len(masks) < count:
        m = rng.random((grid.n, grid.n)) < rng.uniform(0.05, 0.4)
        if m.any():
            masks.append(m)
    return masks[:count]


def _scn_capacity_sandwich(p, seed, rec):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(p["n"])
    theta = theta_cosine(grid, 1.0)
    vt = extremal_field(theta, p["psor_tol"])
    rows = []
    worst = 0.0
    for k, mask in enumerate(_sandwich_masks(grid, p["masks"], rng)):
        base = capacity(theta, mask, "exact", vt).value
        for t in p["t_values"]:
            low = GridField(grid, vt.values - t)
            gen = generalized_capacity(theta, low, vt, mask, "exact").value
            lo_defect = base - gen
            hi_defect = gen - t * base
            worst = max(worst, lo_defect, hi_defect)
            rows.append((float(k), t, base, gen, lo_defect, hi_defect))
    checks = [Check("sandwich_defect", worst <= p["defect_tol"], worst, p["defect_tol"])]
    files = {"sandwich.csv": _csv(
        "mask,t,cap,generalized_cap,lower_defect,upper_defect", rows
    )}
    return checks, files


def _scn_quasi_triangle(p, seed, rec):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(p["n"])
    theta = theta_cosine(grid, 1.0)
    violations = 0
    worst = {pv: 0.0 for pv in p["p_values"]}
    c_test = {}
    for _ in range(p["triples"]):
        u = random_theta_psh(theta, rng)
        v = random_theta_psh(theta, rng)
        w = random_theta_psh(theta, rng)
        for pv in p["p_values"]:
            r = quasi_triangle_check(theta, u, v, w, pv)
            c_test[pv] = r.c_test
            violations += not r.passed
            if np.isfinite(r.ratio):
                worst[pv] = max(worst[pv], r.ratio)
    checks = [Check("zero_violations", violations == 0, float(violations), 0.0)]
    payload = {
        "seed": seed,
        "triples": p["triples"],
        "grid": p["n"],
        "violations": violations,
        "worst_ratio": {format(pv, "g"): worst[pv] for pv in p["p_values"]},
        "c_test": {format(pv, "g"): c_test[pv] for pv in p["p_values"]},
    }
    files = {"quasi_triangle.json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}
    return checks, files


def _scn_local_envelopes(p, seed, rec):
    axis = TAxis(m=p["m"])
    h = np.where(axis.ts == 0.0, -1.0, 0.0)
    interior = local_envelope_ball(h, axis, "interior")
    closure = local_envelope_ball(h, axis, "closure")
    vi = float(np.abs(interior.values).max())
    vc = float(np.abs(closure.values + 1.0).max())
    checks = [
        Check("interior_envelope_is_zero", vi == 0.0, vi, 0.0),
        Check("closure_envelope_is_minus_one", vc == 0.0, vc, 0.0),
    ]
    files = {"local_envelopes.csv": "mode,value\ninterior,0\nclosure,-1\n"}
    return checks, files


def _scn_mass_bound(p, seed, rec):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(p["n"])
    theta = theta_cosine(grid, 1.0)
    f_half = constant_field(grid, 0.5)
    found = 0
    for _ in range(p["seeds"]):
        v = random_smooth_field(grid, rng, modes=3, amplitude=float(rng.uniform(0.05, 2.0)))
        rep = check_supersolution_visc(theta, v, f_half, tol=p["visc_tol"], exponential=False)
        found += rep.passed
    x, _ = grid.coords()
    f_big = GridField(grid, 2.0 + 0.5 * np.cos(2.0 * np.pi * x))
    sol, rep = solve_ma_exponential(theta, MeasureDensity(f_big))
    rec.add("constructed_supersolution", rep)
    gate = check_supersolution_visc(theta, sol, f_big, tol=1e-5)
    checks = [
        Check("below_volume_is_infeasible", not mass_bound_check(theta, f_half), 0.5, 1.0),
        Check("search_finds_no_supersolution", found == 0, float(found), 0.0),
        Check("at_volume_is_feasible", mass_bound_check(theta, f_big), 2.0, 1.0),
        Check("constructed_field_passes", gate.passed, gate.worst_margin, -1e-5),
    ]
    payload = {
        "seed": seed,
        "seeds": p["seeds"],
        "passing_fields_found": found,
        "constructed_margin": gate.worst_margin,
    }
    files = {"mass_bound.json": json.dumps(payload, indent=2, sort_keys=True) + "\n"}
    return checks, files


_RUNNERS = {
    "radial-ball": _scn_radial_ball,
    "penalized-convergence": _scn_penalized_convergence,
    "orthogonality": _scn_orthogonality,
    "min-principle": _scn_min_principle,
    "perron": _scn_perron,
    "viscosity-pipeline": _scn_viscosity_pipeline,
    "extremal-contact": _scn_extremal_contact,
    "capacity-sandwich": _scn_capacity_sandwich,
    "quasi-triangle": _scn_quasi_triangle,
    "local-envelopes": _scn_local_envelopes,
    "mass-bound": _scn_mass_bound,
}


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def run_scenario(config: ScenarioConfig, out_dir=None) -> RunManifest:
    """Run one scenario, write its artifacts and manifest, return the manifest.

    Raises :class:`ScenarioFailure` when a check fails; the manifest and all
    artifacts are written first, so a failing run remains fully inspectable.
    """
    if out_dir is None:
        out_dir = config.out
    if out_dir is None:
        raise ConfigError("field 'out': no output directory (config key or --out)")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rec = _Recorder()
    checks, files = _RUNNERS[config.scenario](config.params, config.seed, rec)

    hashes = {}
    for name, content in sorted(files.items()):
        data = content.encode() if isinstance(content, str) else content
        (out / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()

    manifest = RunManifest(
        scenario=config.scenario,
        version=__version__,
        config_sha256=hashlib.sha256(config.canonical_text().encode()).hexdigest(),
        seed=config.seed,
        checks=checks,
        files=hashes,
        reports=rec.rows,
    )
    (out / "manifest.json").write_text(manifest.to_json())
    if not manifest.passed:
        failed = [c.name for c in checks if not c.passed]
        raise ScenarioFailure(
            f"scenario {config.scenario!r}: checks failed: {', '.join(failed)} "
            f"(manifest written to {out / 'manifest.json'})"
        )
    return manifest


@dataclass
class VerifySummary:
    rows: list  # (config file, scenario, passed, detail)

    @property
    def total(self) -> int:
        return len(self.rows)

    @property
    def failed(self) -> int:
        return sum(not ok for _, _, ok, _ in self.rows)

    @property
    def success(self) -> bool:
        return self.failed == 0

    def matrix(self) -> str:
        lines = [f"{'scenario':24s} {'config':28s} result"]
        for cfg, name, ok, detail in self.rows:
            lines.append(f"{name:24s} {cfg:28s} {'PASS' if ok else 'FAIL'}{' ' + detail if detail else ''}")
        lines.append(
            f"{self.total} scenario(s), {self.total - self.failed} passed, {self.failed} failed"
        )
        return "\n".join(lines)


def _run_config_file(path: Path, out_root: Path):
    config = read_config(path)
    try:
        run_scenario(config, out_root / path.stem)
        return (path.name, config.scenario, True, "")
    except ScenarioFailure as exc:
        return (path.name, config.scenario, False, str(exc).split("(")[0].strip())


def verify_all(config_dir, out_root=None, parallel: bool = False) -> VerifySummary:
    """Run every ``*.cfg`` in a directory; aggregate failures into the summary.

    Configs are executed in sorted order (or in parallel processes when
    requested; scenarios share no state).  An empty directory yields an
    empty, successful summary.  Malformed configs raise :class:`ConfigError`
    immediately.
    """
    config_dir = Path(config_dir)
    if not config_dir.is_dir():
        raise ConfigError(f"config directory {config_dir} does not exist")
    out_root = Path(out_root) if out_root is not None else config_dir / "out"
    paths = sorted(config_dir.glob("*.cfg"))
    for path in paths:  # fail fast on malformed configs, before any runs
        read_config(path)
    if parallel and len(paths) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor() as pool:
            rows = list(pool.map(_run_config_file, paths, [out_root] * len(paths)))
    else:
        rows = [_run_config_file(path, out_root) for path in paths]
    return VerifySummary(rows)
