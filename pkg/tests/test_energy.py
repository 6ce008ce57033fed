"""Energy functional, I_p pairings, capacities, and convergence certificates."""

import numpy as np
import pytest

from maenv import (
    GridField,
    ThetaDensity,
    TorusGrid,
    constant_field,
    field_from_function,
    is_theta_psh,
    psor_envelope,
)
from maenv.energy import (
    EXACT_CAPACITY_LIMIT,
    WeightFunction,
    cap_convergence_metric,
    capacity,
    energy_E,
    energy_Ip,
    extremal_field,
    generalized_capacity,
    quasi_triangle_check,
    tail_inf_envelopes,
)
from maenv.errors import InfeasibleMask, OrderViolation
from maenv.fields import MeasureDensity
from maenv.torus import curvature, integrate

from oracles import (
    capacity_subset_ascent,
    energy_path_quadrature,
    ip_pairing_quadrature,
    periodic_second_difference,
)


@pytest.fixture(scope="module")
def grid():
    return TorusGrid(64)


@pytest.fixture(scope="module")
def theta_one(grid):
    return ThetaDensity(constant_field(grid, 1.0))


def random_psh(theta, rng, amp=0.04):
    """A smooth admissible field from a few low Fourier modes."""
    grid = theta.grid
    n = grid.n
    x = np.arange(n) / n
    xx, yy = np.meshgrid(x, x, indexing="ij")
    vals = np.zeros((n, n))
    for _ in range(3):
        kx, ky = rng.integers(-2, 3, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        vals += rng.uniform(-amp, amp) * np.cos(2 * np.pi * (kx * xx + ky * yy) + phase)
    worst = float(curvature(GridField(grid, vals)).values.min())
    if worst < -0.9:  # keep a positive curvature margin against theta = 1
        vals *= 0.9 / -worst
    u = GridField(grid, vals)
    assert is_theta_psh(theta, u)[0]
    return u


class TestEnergyFunctional:
    def test_extremal_field_has_zero_energy(self, theta_one):
        v = extremal_field(theta_one)
        assert energy_E(theta_one, v, v_theta=v) == 0.0

    def test_translation_by_constant(self, grid, theta_one):
        v = extremal_field(theta_one)
        u = GridField(grid, v.values - 0.8)
        assert abs(energy_E(theta_one, u, v_theta=v) - (-0.8)) < 1e-12

    def test_cosine_closed_form(self, grid, theta_one):
        # for theta = 1 the extremal field is 0 and E(eps*cos) reduces to the
        # discrete symbol: -0.25 * c_h * eps^2 with c_h the stencil eigenvalue
        eps = 0.05
        u = field_from_function(grid, lambda x, y: eps * np.cos(2 * np.pi * x))
        h = grid.h
        c_h = (2.0 - 2.0 * np.cos(2 * np.pi * h)) / (2 * np.pi * h**2)
        got = energy_E(theta_one, u)
        assert abs(got - (-0.25 * c_h * eps**2)) < 1e-12
        # the matrix oracle gives the same eigenvalue on the cosine mode
        mat = periodic_second_difference(grid.n)
        mode = np.cos(2 * np.pi * np.arange(grid.n) / grid.n)
        assert np.abs(mat @ mode + c_h * mode).max() < 1e-10

    def test_path_quadrature_oracle(self, grid, theta_one):
        rng = np.random.default_rng(3)
        u = random_psh(theta_one, rng)
        v = random_psh(theta_one, rng)
        direct = energy_E(theta_one, u) - energy_E(theta_one, v)
        path = energy_path_quadrature(theta_one, u, v)
        assert abs(direct - path) < 1e-10

    def test_concavity_along_segments(self, theta_one):
        rng = np.random.default_rng(7)
        for _ in range(50):
            u = random_psh(theta_one, rng)
            w = random_psh(theta_one, rng)
            eu, ew = energy_E(theta_one, u), energy_E(theta_one, w)
            for lam in (0.25, 0.5, 0.75):
                mid = GridField(u.grid, lam * u.values + (1 - lam) * w.values)
                assert energy_E(theta_one, mid) >= lam * eu + (1 - lam) * ew - 1e-10

    def test_monotone_in_the_field(self, grid, theta_one):
        rng = np.random.default_rng(11)
        u = random_psh(theta_one, rng)
        above = GridField(grid, u.values + 0.3)
        assert energy_E(theta_one, above) > energy_E(theta_one, u)


class TestIpPairing:
    def test_zero_on_the_diagonal(self, theta_one):
        rng = np.random.default_rng(1)
        u = random_psh(theta_one, rng)
        for p in (0.5, 1.0, 2.0):
            assert energy_Ip(theta_one, u, u, p) == 0.0

    def test_constant_gap_closed_form(self, grid, theta_one):
        rng = np.random.default_rng(2)
        u = random_psh(theta_one, rng)
        v = GridField(grid, u.values + 0.37)
        for p in (0.5, 1.0, 2.0):
            want = 2.0 * 0.37**p * theta_one.total_mass
            assert abs(energy_Ip(theta_one, u, v, p) - want) < 1e-12

    def test_symmetry_and_nonnegativity(self, theta_one):
        rng = np.random.default_rng(4)
        for _ in range(5):
            u = random_psh(theta_one, rng)
            v = random_psh(theta_one, rng)
            for p in (0.5, 1.0, 2.0):
                a = energy_Ip(theta_one, u, v, p)
                b = energy_Ip(theta_one, v, u, p)
                assert a == b
                assert a >= 0.0

    def test_quadrature_oracle(self, theta_one):
        rng = np.random.default_rng(5)
        u = random_psh(theta_one, rng)
        v = random_psh(theta_one, rng)
        for p in (1.0, 2.0):
            want = ip_pairing_quadrature(theta_one, u, v, p)
            assert abs(energy_Ip(theta_one, u, v, p) - want) < 1e-10

    def test_p_validation(self, theta_one):
        rng = np.random.default_rng(6)
        u = random_psh(theta_one, rng)
        with pytest.raises(ValueError):
            energy_Ip(theta_one, u, u, 0.0)


class TestQuasiTriangle:
    def test_equal_pair_passes_with_zero_lhs(self, theta_one):
        rng = np.random.default_rng(8)
        u = random_psh(theta_one, rng)
        w = random_psh(theta_one, rng)
        res = quasi_triangle_check(theta_one, u, u, w, 1.0)
        assert res.lhs == 0.0 and res.passed

    def test_anchor_at_one_endpoint(self, theta_one):
        rng = np.random.default_rng(9)
        u = random_psh(theta_one, rng)
        v = random_psh(theta_one, rng)
        res = quasi_triangle_check(theta_one, u, v, u, 1.0)
        assert res.passed
        assert res.c_test > 1.0

    def test_constant_matches_stated_formula(self, theta_one):
        rng = np.random.default_rng(10)
        u, v, w = (random_psh(theta_one, rng) for _ in range(3))
        for p in (0.5, 1.0, 2.0):
            res = quasi_triangle_check(theta_one, u, v, w, p)
            assert res.c_test == 2 ** (p + 1) + 3 * 2 ** (2 * p + 2)

    def test_random_suite(self, theta_one):
        rng = np.random.default_rng(12)
        headroom = 0.0
        for _ in range(60):
            u, v, w = (random_psh(theta_one, rng) for _ in range(3))
            for p in (0.5, 1.0, 2.0):
                res = quasi_triangle_check(theta_one, u, v, w, p)
                assert res.passed
                assert res.lhs <= res.rhs
                headroom = max(headroom, res.ratio / res.c_test)
        # the proof constant should dominate with a wide margin
        assert headroom < 0.5


@pytest.fixture(scope="module")
def small():
    g = TorusGrid(32)
    return g, ThetaDensity(constant_field(g, 1.0))


@pytest.fixture(scope="module")
def small_with_point_mask(small):
    g, th = small
    mask = np.zeros((g.n, g.n), bool)
    mask[g.n // 2, g.n // 2] = True
    return g, th, mask


class TestCapacity:
    def test_empty_mask(self, small):
        g, th = small
        res = capacity(th, np.zeros((g.n, g.n), bool))
        assert res.value == 0.0

    def test_full_grid_saturates_total_mass(self, small):
        g, th = small
        res = capacity(th, np.ones((g.n, g.n), bool), mode="exact")
        assert abs(res.value - th.total_mass) < 1e-9

    def test_fat_stripe_still_saturates(self, small):
        # a competitor can afford curvature mass 1 on a half-width stripe
        # while staying within the unit box, so nothing is lost
        g, th = small
        x = np.arange(g.n) / g.n
        stripe = ((x[:, None] >= 0.25) & (x[:, None] < 0.75)) & np.ones((1, g.n), bool)
        res = capacity(th, stripe, mode="exact")
        assert abs(res.value - th.total_mass) < 1e-9

    def test_single_site_is_strict_and_matches_witness(self, small):
        g, th = small
        mask = np.zeros((g.n, g.n), bool)
        mask[g.n // 2, g.n // 2] = True
        exact = capacity(th, mask, mode="exact")
        assert exact.value < th.total_mass - 0.1
        lower = capacity(th, mask, mode="lower_bound")
        assert abs(exact.value - lower.value) < 1e-8
        # the witness against the box constraints
        v = extremal_field(th)
        assert (lower.witness.values <= v.values + 1e-9).all()
        assert (lower.witness.values >= v.values - 1.0 - 1e-9).all()
        mass = 1.0 + curvature(lower.witness).values
        assert abs(float((mass[mask]).sum()) * g.h**2 - lower.value) < 1e-12

    def test_multi_start_ascent_agrees(self, small):
        g, th = small
        mask = np.zeros((g.n, g.n), bool)
        mask[g.n // 2, g.n // 2] = True
        exact = capacity(th, mask, mode="exact")
        finals = capacity_subset_ascent(th, mask, seeds=10)
        assert max(finals) - min(finals) < 1e-6
        assert abs(max(finals) - exact.value) < 1e-6

    def test_monotone_and_subadditive(self, small):
        g, th = small
        rng = np.random.default_rng(13)
        for _ in range(3):
            e1 = rng.random((g.n, g.n)) < 0.02
            e2 = rng.random((g.n, g.n)) < 0.02
            if not e1.any() or not e2.any():
                continue
            c1 = capacity(th, e1, mode="exact").value
            c2 = capacity(th, e2, mode="exact").value
            cu = capacity(th, e1 | e2, mode="exact").value
            assert cu >= max(c1, c2) - 1e-9
            assert cu <= c1 + c2 + 1e-9

    def test_exact_mode_grid_cutoff(self):
        g = TorusGrid(128)
        th = ThetaDensity(constant_field(g, 1.0))
        mask = np.zeros((g.n, g.n), bool)
        mask[0, 0] = True
        with pytest.raises(ValueError):
            capacity(th, mask, mode="exact")
        assert EXACT_CAPACITY_LIMIT == 64

    def test_mask_shape_mismatch(self, small):
        g, th = small
        with pytest.raises(InfeasibleMask):
            capacity(th, np.zeros((g.n + 1, g.n), bool))


class TestGeneralizedCapacity:
    def test_unit_band_reduces_to_plain_capacity(self, small_with_point_mask):
        g, th, mask = small_with_point_mask
        v = extremal_field(th)
        low = GridField(g, v.values - 1.0)
        plain = capacity(th, mask, mode="exact")
        gen = generalized_capacity(th, low, v, mask, mode="exact")
        assert abs(gen.value - plain.value) < 1e-9

    def test_band_width_sandwich(self, small_with_point_mask):
        g, th, mask = small_with_point_mask
        v = extremal_field(th)
        plain = capacity(th, mask, mode="exact").value
        for t in (1.0, 2.0, 5.0):
            low = GridField(g, v.values - t)
            wide = generalized_capacity(th, low, v, mask, mode="exact").value
            assert wide >= plain - 1e-8
            assert wide <= t * plain + 1e-8

    def test_nested_masks_monotone(self, small_with_point_mask):
        g, th, _ = small_with_point_mask
        v = extremal_field(th)
        low = GridField(g, v.values - 1.0)
        e1 = np.zeros((g.n, g.n), bool)
        e1[10:12, 10:12] = True
        e2 = e1.copy()
        e2[10:16, 10:16] = True
        c1 = generalized_capacity(th, low, v, e1, mode="exact").value
        c2 = generalized_capacity(th, low, v, e2, mode="exact").value
        assert c2 >= c1 - 1e-9

    def test_crossed_bounds_rejected(self, small_with_point_mask):
        g, th, mask = small_with_point_mask
        v = extremal_field(th)
        high = GridField(g, v.values - 2.0)
        with pytest.raises(OrderViolation):
            generalized_capacity(th, GridField(g, v.values), high, mask)

    def test_empty_mask(self, small_with_point_mask):
        g, th, _ = small_with_point_mask
        v = extremal_field(th)
        low = GridField(g, v.values - 1.0)
        res = generalized_capacity(th, low, v, np.zeros((g.n, g.n), bool))
        assert res.value == 0.0


class TestConvergenceInCapacity:
    def test_constant_sequence_gives_zeros(self, grid, theta_one):
        rng = np.random.default_rng(14)
        u = random_psh(theta_one, rng)
        vals = cap_convergence_metric(theta_one, [u, u, u], u, eps=1e-2)
        assert vals == [0.0, 0.0, 0.0]

    def test_shrinking_shift_crosses_the_threshold(self, grid, theta_one):
        rng = np.random.default_rng(15)
        u = random_psh(theta_one, rng)
        seq = [GridField(grid, u.values + 1.0 / j) for j in (10, 100, 1000)]
        vals = cap_convergence_metric(theta_one, seq, u, eps=5e-2)
        assert vals[0] > 0.0
        assert vals[1] == 0.0 and vals[2] == 0.0


class TestTailInfEnvelopes:
    def test_constant_sequence_fixed(self, theta_one):
        rng = np.random.default_rng(16)
        u = random_psh(theta_one, rng)
        envs = tail_inf_envelopes(theta_one, [u] * 4)
        for e in envs:
            assert np.abs(e.values - u.values).max() < 1e-12

    def test_constant_deficits_pass_through(self, grid, theta_one):
        rng = np.random.default_rng(17)
        u = random_psh(theta_one, rng)
        seq = [GridField(grid, u.values - 2.0**-k) for k in range(6)]
        envs = tail_inf_envelopes(theta_one, seq)
        for j, e in enumerate(envs):
            assert np.abs(e.values - (u.values - 2.0**-j)).max() < 1e-9

    def test_shrinking_oscillations_recover_the_limit(self, grid, theta_one):
        # u_k = u + 2^-k cos(2 pi (k+1) x) projected back to admissible;
        # the tail-inf envelopes must rise to u within the 2^-j budget
        rng = np.random.default_rng(18)
        u = random_psh(theta_one, rng, amp=0.02)
        seq = []
        for k in range(11):
            bump = field_from_function(
                grid, lambda x, y, k=k: 2.0**-k * np.cos(2 * np.pi * (k + 1) * x)
            )
            cand = GridField(grid, u.values + bump.values)
            seq.append(psor_envelope(theta_one, cand, tol=1e-10).u)
        envs = tail_inf_envelopes(theta_one, seq)
        dists = [np.abs(e.values - u.values).max() for e in envs]
        for a, b in zip(dists, dists[1:]):
            assert b <= a + 1e-9
        assert dists[10] < 1e-2


class TestWeightFunction:
    def test_families_and_validation(self):
        ident = WeightFunction("identity")
        assert ident(-2.0) == -2.0
        power = WeightFunction("power", q=0.5)
        assert abs(power(-4.0) + 2.0) < 1e-15
        with pytest.raises(ValueError):
            WeightFunction("exponential")
        with pytest.raises(ValueError):
            WeightFunction("power", q=1.5)
        with pytest.raises(ValueError):
            WeightFunction("power", q=0.5)(1.0)

    def test_sampled_convexity_invariant(self):
        ts = -np.linspace(0.01, 5.0, 200)
        for wf in (WeightFunction("identity"), WeightFunction("power", q=0.7)):
            assert wf.is_convex_increasing_on(ts)
