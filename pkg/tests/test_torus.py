"""Grid, field, curvature, regularization, and I/O behavior."""

import numpy as np
import pytest

from maenv import (
    GridField,
    MeasureDensity,
    ThetaDensity,
    TorusGrid,
    constant_field,
    curvature,
    field_from_function,
    field_with_curvature,
    inf_convolution,
    integrate,
    is_theta_psh,
    ma_density,
    norms,
    read_field_binary,
    read_field_csv,
    theta_cosine,
    write_field_binary,
    write_field_csv,
)
from maenv.torus import laplacian_matrix

from oracles import moreau_of_step


def discrete_cos_curvature_factor(n: int) -> float:
    """Exact eigenvalue of the scaled five-point stencil on cos(2 pi x)."""
    h = 1.0 / n
    return (2.0 - 2.0 * np.cos(2.0 * np.pi * h)) / (2.0 * np.pi * h * h)


class TestGridAndFields:
    def test_grid_validation(self):
        TorusGrid(8)
        with pytest.raises(ValueError):
            TorusGrid(7)
        with pytest.raises(ValueError):
            TorusGrid(6)

    def test_field_requires_finite_matching_values(self):
        grid = TorusGrid(16)
        with pytest.raises(ValueError):
            GridField(grid, np.full((16, 16), np.nan))
        with pytest.raises(ValueError):
            GridField(grid, np.zeros((8, 8)))

    def test_fields_are_immutable(self):
        grid = TorusGrid(16)
        u = constant_field(grid, 1.0)
        with pytest.raises(ValueError):
            u.values[0, 0] = 2.0

    def test_density_validation(self):
        grid = TorusGrid(16)
        with pytest.raises(ValueError):
            ThetaDensity(constant_field(grid, -1.0))  # total mass must be positive
        with pytest.raises(ValueError):
            MeasureDensity(constant_field(grid, -0.5))  # must be nonnegative
        with pytest.raises(ValueError):
            MeasureDensity(constant_field(grid, 0.0))  # must carry some mass

    def test_field_from_function_matches_coords(self):
        grid = TorusGrid(32)
        u = field_from_function(grid, lambda x, y: x + 10.0 * y)
        x, y = grid.coords()
        assert np.array_equal(u.values, x + 10.0 * y)


class TestCurvature:
    def test_cosine_curvature_approaches_continuum(self):
        # second derivative of eps*cos(2 pi x) over 2 pi is -2 pi eps cos(2 pi x)
        grid = TorusGrid(256)
        x, _ = grid.coords()
        eps = 0.1
        got = curvature(GridField(grid, eps * np.cos(2.0 * np.pi * x))).values
        want = -2.0 * np.pi * eps * np.cos(2.0 * np.pi * x)
        assert np.abs(got - want).max() < 1e-3

    def test_cosine_curvature_exact_stencil_eigenvalue(self):
        grid = TorusGrid(64)
        x, _ = grid.coords()
        eps = 0.3
        got = curvature(GridField(grid, eps * np.cos(2.0 * np.pi * x))).values
        want = -discrete_cos_curvature_factor(64) * eps * np.cos(2.0 * np.pi * x)
        assert np.abs(got - want).max() < 1e-12

    def test_ma_density_of_cosine(self):
        grid = TorusGrid(256)
        x, _ = grid.coords()
        eps = 0.1
        theta = theta_cosine(grid, 1.0)
        ma = ma_density(theta, GridField(grid, eps * np.cos(2.0 * np.pi * x)))
        want = 1.0 - 2.0 * np.pi * eps * np.cos(2.0 * np.pi * x)
        assert np.abs(ma.values - want).max() < 1e-3

    def test_ma_mass_is_exactly_total_theta_mass(self):
        grid = TorusGrid(64)
        rng = np.random.default_rng(0)
        theta = theta_cosine(grid, 1.0, 0.7)
        u = GridField(grid, rng.standard_normal((64, 64)))
        assert abs(integrate(ma_density(theta, u)) - theta.total_mass) < 1e-12

    def test_laplacian_matrix_matches_stencil_and_is_symmetric(self):
        n = 32
        grid = TorusGrid(n)
        lap = laplacian_matrix(n)
        assert abs(lap - lap.T).max() == 0.0
        assert np.abs(lap @ np.ones(n * n)).max() == 0.0
        rng = np.random.default_rng(1)
        u = GridField(grid, rng.standard_normal((n, n)))
        via_matrix = (lap @ u.values.ravel()).reshape(n, n) / (2.0 * np.pi)
        assert np.abs(via_matrix - curvature(u).values).max() < 1e-12

    def test_field_with_curvature_inverts_curvature(self):
        grid = TorusGrid(64)
        rng = np.random.default_rng(2)
        target = GridField(grid, rng.standard_normal((64, 64)))
        u = field_with_curvature(grid, target)
        got = curvature(u).values
        want = target.values - target.values.mean()
        assert np.abs(got - want).max() < 1e-10
        assert abs(u.values.mean()) < 1e-12


class TestThetaPsh:
    def test_zero_is_admissible_for_unit_density(self):
        grid = TorusGrid(64)
        theta = theta_cosine(grid, 1.0)
        ok, report = is_theta_psh(theta, constant_field(grid, 0.0), tol=0.0)
        assert ok and report.passed
        assert report.min_value >= 0.0

    def test_large_cosine_is_rejected(self):
        # curvature magnitude 2 pi eps exceeds the unit density for eps = 0.2
        grid = TorusGrid(128)
        x, _ = grid.coords()
        theta = theta_cosine(grid, 1.0)
        ok, report = is_theta_psh(theta, GridField(grid, 0.2 * np.cos(2.0 * np.pi * x)))
        assert not ok
        assert report.min_value < 0.0

    def test_sign_changing_density_rejects_zero(self):
        grid = TorusGrid(64)
        theta = theta_cosine(grid, 1.0, 2.0)
        ok, report = is_theta_psh(theta, constant_field(grid, 0.0), tol=0.0)
        assert not ok
        i, j = report.argmin
        assert theta.density.values[i, j] < 0.0


class TestInfConvolution:
    def test_matches_closed_form_on_step(self):
        grid = TorusGrid(128)
        x, _ = grid.coords()
        x0, x1 = 0.375, 0.625
        u = GridField(grid, np.where((x >= x0) & (x < x1), -1.0, 0.0))
        # distance to the sampled set, whose rightmost site is x1 - h
        right = x1 - grid.h
        d = np.maximum.reduce([x0 - x, x - right, np.zeros_like(x)])
        d = np.minimum(d, 1.0 - (right - x0) - d)
        for j in (16.0, 64.0):
            got = inf_convolution(u, j).values
            assert np.abs(got - moreau_of_step(d, j)).max() < 1e-12

    def test_below_input_monotone_in_j_and_contractive(self):
        grid = TorusGrid(48)
        rng = np.random.default_rng(3)
        u = GridField(grid, rng.standard_normal((48, 48)))
        v = GridField(grid, u.values + rng.uniform(-0.3, 0.3, (48, 48)))
        cu16, cu64 = inf_convolution(u, 16.0), inf_convolution(u, 64.0)
        assert (cu16.values <= u.values + 1e-14).all()
        assert (cu16.values <= cu64.values + 1e-14).all()
        gap = np.abs(inf_convolution(v, 16.0).values - cu16.values).max()
        assert gap <= np.abs(u.values - v.values).max() + 1e-14

    def test_rejects_nonpositive_strength(self):
        grid = TorusGrid(16)
        with pytest.raises(ValueError):
            inf_convolution(constant_field(grid, 0.0), 0.0)


class TestNorms:
    def test_identical_fields_have_zero_norms(self):
        grid = TorusGrid(32)
        rng = np.random.default_rng(4)
        u = GridField(grid, rng.standard_normal((32, 32)))
        d = norms(u, u)
        assert d["sup"] == d["l1"] == d["l2"] == 0.0

    def test_constant_difference(self):
        grid = TorusGrid(32)
        u = constant_field(grid, 5.0)
        v = constant_field(grid, 2.0)
        d = norms(u, v)
        assert d["sup"] == pytest.approx(3.0, abs=1e-14)
        assert d["l1"] == pytest.approx(3.0, abs=1e-14)
        assert d["l2"] == pytest.approx(3.0, abs=1e-14)

    def test_cosine_difference(self):
        # sup = 1 at x = 0; mean of cos^2 is exactly 1/2 on an even grid
        grid = TorusGrid(256)
        x, _ = grid.coords()
        u = GridField(grid, np.cos(2.0 * np.pi * x))
        v = constant_field(grid, 0.0)
        d = norms(u, v)
        assert d["sup"] == 1.0
        assert abs(d["l2"] - 2.0**-0.5) < 1e-14
        assert abs(d["l1"] - 2.0 / np.pi) < 1e-3


class TestSerialization:
    def test_csv_roundtrip_is_exact(self, tmp_path):
        grid = TorusGrid(24)
        rng = np.random.default_rng(5)
        u = GridField(grid, rng.standard_normal((24, 24)) * 1e-7)
        path = tmp_path / "field.csv"
        write_field_csv(path, u)
        back = read_field_csv(path)
        assert np.array_equal(back.values, u.values)

    def test_binary_roundtrip_is_exact(self, tmp_path):
        grid = TorusGrid(24)
        rng = np.random.default_rng(6)
        u = GridField(grid, rng.standard_normal((24, 24)))
        path = tmp_path / "field.bin"
        write_field_binary(path, u)
        back = read_field_binary(path)
        assert np.array_equal(back.values, u.values)

    def test_binary_rejects_foreign_files(self, tmp_path):
        from maenv.errors import MaenvError

        path = tmp_path / "bogus.bin"
        path.write_bytes(b"not a field at all")
        with pytest.raises(MaenvError):
            read_field_binary(path)
