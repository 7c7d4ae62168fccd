import io
import math

import numpy as np
import pytest

from eulerlab.errors import DomainError, ResolutionError
from eulerlab.grid import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    build_mollifier,
    constant_field,
    div,
    field_from_function,
    grad,
    integral,
    lp_norm,
    mollify,
    read_columns_csv,
    shift,
    weierstrass_field,
    write_columns_csv,
)


def _random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return ScalarField(grid, rng.standard_normal(grid.shape))


class TestGrid:
    def test_extent_is_two_per_dimension(self):
        g = PeriodicGrid(1, 128)
        assert g.cell_width * g.cells_per_dim == pytest.approx(2.0)
        assert g.axis_centers()[0] == pytest.approx(-1.0 + 0.5 * g.cell_width)

    @pytest.mark.parametrize("dims,cells", [(3, 16), (0, 16), (1, 3)])
    def test_validation(self, dims, cells):
        with pytest.raises(ValueError):
            PeriodicGrid(dims, cells)

    def test_fields_are_immutable_and_finite(self, grid256):
        f = constant_field(grid256, 1.0)
        with pytest.raises(ValueError):
            f.values[0] = 2.0
        with pytest.raises(ValueError):
            ScalarField(grid256, np.full(grid256.shape, np.nan))


class TestNorms:
    @pytest.mark.parametrize("dims,n", [(1, 64), (2, 16)])
    def test_l1_of_unit_constant_is_domain_measure(self, dims, n):
        g = PeriodicGrid(dims, n)
        assert lp_norm(constant_field(g, 1.0), 1) == pytest.approx(2.0**dims, rel=1e-14)

    def test_rejects_p_below_one(self, grid256):
        with pytest.raises(DomainError):
            lp_norm(constant_field(grid256, 1.0), 0.5)

    def test_norms_are_bit_reproducible(self, grid256):
        f = _random_field(grid256)
        vals = {lp_norm(f, p) for _ in range(3) for p in (3.0,)}
        assert len(vals) == 1

    def test_vector_field_norm_uses_euclidean_magnitude(self, grid2d):
        v = VectorField(grid2d, np.stack([np.full(grid2d.shape, 3.0),
                                          np.full(grid2d.shape, 4.0)]))
        assert lp_norm(v, np.inf) == pytest.approx(5.0)


class TestShift:
    def test_zero_and_full_period_are_identity(self, grid256):
        f = _random_field(grid256)
        assert np.array_equal(shift(f, 0.0).field.values, f.values)
        assert np.array_equal(shift(f, 2.0).field.values, f.values)

    def test_lattice_shift_is_exact_isometry(self, grid256):
        f = _random_field(grid256)
        for p in (1.0, 2.0, 3.0, np.inf):
            moved = shift(f, 5 * grid256.cell_width).field
            assert lp_norm(moved, p) == lp_norm(f, p)

    def test_snapping_is_flagged(self, grid256):
        f = _random_field(grid256)
        res = shift(f, 1.4 * grid256.cell_width)
        assert res.snapped and res.offsets == (1,)
        assert not shift(f, grid256.cell_width).snapped

    def test_difference_triangle_inequality(self, grid256):
        f = _random_field(grid256)
        moved = shift(f, 7 * grid256.cell_width).field
        diff = ScalarField(grid256, moved.values - f.values)
        assert lp_norm(diff, 2) <= 2.0 * lp_norm(f, 2) + 1e-12


class TestMollifier:
    def test_kernel_invariants(self, grid256):
        mol = build_mollifier(grid256, 0.1)
        vol = grid256.cell_volume
        assert math.fsum(mol.weights) * vol == pytest.approx(1.0, rel=1e-12)
        assert np.all(mol.weights >= 0.0)
        assert mol.radius_cells * grid256.cell_width < 0.1

    def test_too_small_radius_raises(self, grid256):
        with pytest.raises(ResolutionError):
            build_mollifier(grid256, 1.5 * grid256.cell_width)

    def test_constant_is_fixed_point(self, grid256):
        mol = build_mollifier(grid256, 0.05)
        out = mollify(constant_field(grid256, 3.7), mol)
        np.testing.assert_allclose(out.values, 3.7, rtol=1e-13)

    def test_mass_preserved(self, grid256):
        f = _random_field(grid256)
        out = mollify(f, build_mollifier(grid256, 0.1))
        assert integral(out) == pytest.approx(integral(f), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0, np.inf])
    def test_contraction_in_every_lp(self, grid256, p):
        f = _random_field(grid256, seed=5)
        out = mollify(f, build_mollifier(grid256, 0.1))
        assert lp_norm(out, p) <= lp_norm(f, p) * (1.0 + 1e-12)

    def test_commutes_with_lattice_shift_exactly(self, grid256):
        f = _random_field(grid256, seed=2)
        mol = build_mollifier(grid256, 0.0625)
        a = shift(mollify(f, mol), 3 * grid256.cell_width).field
        b = mollify(shift(f, 3 * grid256.cell_width).field, mol)
        assert np.array_equal(a.values, b.values)

    def test_smooth_convergence_rate_two(self, grid8k):
        f = field_from_function(grid8k, lambda x: np.sin(np.pi * x))
        eps = [2.0 ** (-k) for k in range(3, 9)]
        errs = [lp_norm(ScalarField(grid8k,
                                    mollify(f, build_mollifier(grid8k, e)).values
                                    - f.values), 2)
                for e in eps]
        slope = np.polyfit(np.log(eps), np.log(errs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)

    def test_matches_dense_quadrature_oracle(self, grid256):
        # continuum convolution of sin(pi x) with the discrete kernel taps
        f = field_from_function(grid256, lambda x: np.sin(np.pi * x))
        eps = 0.125
        mol = build_mollifier(grid256, eps)
        out = mollify(f, mol)
        x0 = grid256.axis_centers()[17]
        expected = sum(
            w * grid256.cell_volume * math.sin(math.pi * (x0 - off[0] * grid256.cell_width))
            for off, w in zip(mol.offsets, mol.weights)
        )
        assert out.values[17] == pytest.approx(expected, rel=1e-12)

    def test_2d_mollify_contracts(self, grid2d):
        f = _random_field(grid2d, seed=9)
        out = mollify(f, build_mollifier(grid2d, 0.2))
        assert lp_norm(out, 2) <= lp_norm(f, 2)


class TestCalculus:
    def test_grad_of_constant_vanishes(self, grid256):
        g = grad(constant_field(grid256, 4.2))
        assert np.all(g.values == 0.0)

    def test_laplacian_second_order(self):
        errs = {}
        for n in (64, 128, 256):
            g = PeriodicGrid(1, n)
            f = field_from_function(g, lambda x: np.sin(np.pi * x))
            lap = div(grad(f))
            exact = -np.pi**2 * np.sin(np.pi * g.axis_centers())
            errs[n] = float(np.max(np.abs(lap.values - exact)))
        rate = np.log2(errs[64] / errs[128])
        assert rate == pytest.approx(2.0, abs=0.15)
        assert errs[128] > errs[256]

    def test_div_grad_2d(self, grid2d):
        f = field_from_function(grid2d, lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y))
        lap = div(grad(f))
        exact = -2 * np.pi**2 * f.values
        assert np.max(np.abs(lap.values - exact)) < 0.2


class TestWeierstrass:
    def test_bounded_by_geometric_series(self, grid8k):
        for alpha in (0.4, 0.6, 0.8, 1.0):
            f = weierstrass_field(alpha, 13, grid8k)
            assert np.max(np.abs(f.values)) <= 1.0 / (1.0 - 2.0 ** (-alpha)) + 1e-12

    def test_requires_levels_reaching_grid(self, grid256):
        with pytest.raises(ResolutionError):
            weierstrass_field(0.5, 4, grid256)

    def test_rejects_alpha_out_of_range(self, grid256):
        with pytest.raises(DomainError):
            weierstrass_field(1.5, 8, grid256)

    def test_2d_is_tensor_product(self):
        g = PeriodicGrid(2, 64)
        f = weierstrass_field(0.6, 6, g)
        one_d = weierstrass_field(0.6, 6, PeriodicGrid(1, 64))
        np.testing.assert_allclose(f.values, np.outer(one_d.values, one_d.values))


class TestCsv:
    def test_roundtrip_is_bit_exact_1d(self, grid256):
        f = _random_field(grid256)
        buf = io.StringIO()
        write_columns_csv(buf, grid256, {"value": f.values}, comments=["config_hash=abc"])
        buf.seek(0)
        grid_back, cols = read_columns_csv(buf)
        assert grid_back == grid256
        assert np.array_equal(cols["value"], f.values)

    def test_roundtrip_multicolumn_2d(self, grid2d):
        rng = np.random.default_rng(1)
        cols = {"rho": rng.standard_normal(grid2d.shape),
                "m1": rng.standard_normal(grid2d.shape)}
        buf = io.StringIO()
        write_columns_csv(buf, grid2d, cols)
        buf.seek(0)
        grid_back, back = read_columns_csv(buf)
        assert grid_back == grid2d
        for name in cols:
            assert np.array_equal(back[name], cols[name])

    def test_header_format(self, grid256):
        buf = io.StringIO()
        write_columns_csv(buf, grid256, {"value": np.zeros(grid256.shape)})
        first = buf.getvalue().splitlines()[0]
        assert first == "x,value"
