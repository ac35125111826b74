import math

import numpy as np
import pytest

from cone_rigidity.models import ConeGeometry, Coupled3Block
from cone_rigidity.services.modes import radial_operator
from cone_rigidity.services.verify import (
    IDENTITIES,
    ONE_FORM,
    SYMMETRIC,
    TENSOR2,
    TWO_FORM,
    ChartGrid,
    TensorField,
    adjointness_defect,
    covariant_apply,
    identity_convergence,
    identity_residual,
    metric_field,
    poincare_2form_check,
    sample_field,
)
from cone_rigidity.utils.errors import GeometryDomainError, ValenceError


def _rng():
    return np.random.default_rng(7)


class TestChartGrid:
    def test_default_shapes(self, torus_grid, half_plane_grid):
        assert torus_grid.shape == (32, 16, 16)
        assert half_plane_grid.shape == (32, 16, 16, 1)
        assert half_plane_grid.refine().shape == (64, 32, 32, 1)

    def test_periodic_axes(self, torus_grid, half_plane_grid):
        assert [torus_grid.periodic(a) for a in range(3)] == [False, True, True]
        assert [half_plane_grid.periodic(a) for a in range(4)] == [False, True, False, False]

    def test_density(self, torus_grid):
        r = torus_grid.axis_coordinates(0)
        np.testing.assert_allclose(torus_grid.density[:, 0, 0], np.sinh(r) * np.cosh(r))

    def test_too_close_to_axis(self, torus_geometry):
        with pytest.raises(GeometryDomainError):
            ChartGrid(torus_geometry, (32, 16, 16), r_bounds=(0.01, 1.0))

    def test_outside_tube(self, torus_geometry):
        with pytest.raises(GeometryDomainError):
            ChartGrid(torus_geometry, (32, 16, 16), r_bounds=(0.2, 1.5))

    @pytest.mark.parametrize("shape", [(4, 16, 16), (32, 16), (32, 16, 16, 1)])
    def test_bad_shape(self, torus_geometry, shape):
        with pytest.raises(ValueError):
            ChartGrid(torus_geometry, shape)

    def test_half_plane_needs_single_y_node(self, half_plane_geometry):
        with pytest.raises(ValueError):
            ChartGrid(half_plane_geometry, (32, 16, 16, 2))

    def test_higher_dimension_unsupported(self):
        with pytest.raises(ValueError):
            ChartGrid(ConeGeometry(n=5, beta=2.0), (32, 16, 16, 1, 1))


class TestOperators:
    @pytest.mark.parametrize("grid_name", ["torus_grid", "half_plane_grid"])
    def test_metric(self, request, grid_name):
        grid = request.getfixturevalue(grid_name)
        g = metric_field(grid)
        np.testing.assert_allclose(covariant_apply("trace", g, grid).components, grid.n)
        np.testing.assert_allclose(covariant_apply("nabla", g, grid).components, 0.0, atol=1e-12)

    def test_delta_star_is_symmetric(self, torus_grid):
        result = covariant_apply("delta_star", sample_field(ONE_FORM, torus_grid, _rng()), torus_grid)
        assert result.valence == SYMMETRIC
        np.testing.assert_allclose(result.components, np.swapaxes(result.components, -1, -2))

    def test_output_valences(self, torus_grid):
        u = sample_field(ONE_FORM, torus_grid, _rng())
        assert covariant_apply("nabla", u, torus_grid).valence == TENSOR2
        assert covariant_apply("d", u, torus_grid).valence == TWO_FORM
        assert covariant_apply("delta", u, torus_grid).components.shape == torus_grid.shape

    def test_wrong_valence(self, torus_grid):
        with pytest.raises(ValenceError):
            covariant_apply("trace", sample_field(ONE_FORM, torus_grid, _rng()), torus_grid)

    def test_unknown_operator(self, torus_grid):
        with pytest.raises(ValueError):
            covariant_apply("curl", metric_field(torus_grid), torus_grid)

    def test_field_on_other_grid(self, torus_grid):
        with pytest.raises(ValenceError):
            covariant_apply("nabla", sample_field(ONE_FORM, torus_grid.refine(), _rng()), torus_grid)

    def test_symmetry_is_validated(self, torus_grid):
        components = np.zeros(torus_grid.shape + (3, 3))
        components[..., 0, 1] = 1.0
        with pytest.raises(ValenceError):
            TensorField(SYMMETRIC, components)
        with pytest.raises(ValenceError):
            TensorField(TWO_FORM, components)


class TestIdentities:
    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("grid_name", ["torus_grid", "half_plane_grid"])
    @pytest.mark.parametrize("identity", sorted(IDENTITIES))
    def test_second_order(self, request, identity, grid_name, seed):
        result = identity_convergence(identity, request.getfixturevalue(grid_name), seed=seed)
        assert result.residuals[1] < result.residuals[0]
        assert 1.7 <= result.order <= 2.3

    def test_refined_shapes(self, torus_grid, half_plane_grid):
        assert identity_convergence("W1", torus_grid, seed=3).shapes == [(32, 16, 16), (64, 32, 32)]
        assert identity_convergence("W1", half_plane_grid, seed=3).shapes == [(32, 16, 16, 1), (64, 32, 32, 1)]

    def test_zero_sample(self, torus_grid):
        zero = TensorField(ONE_FORM, np.zeros(torus_grid.shape + (3,)))
        result = identity_residual("W1", zero, torus_grid)
        assert result.residual == 0.0
        assert result.relative == 0.0

    def test_wrong_sample_valence(self, torus_grid):
        with pytest.raises(ValenceError):
            identity_residual("W2", sample_field(ONE_FORM, torus_grid, _rng()), torus_grid)

    def test_unknown_identity(self, torus_grid):
        with pytest.raises(ValueError):
            identity_residual("W9", sample_field(ONE_FORM, torus_grid, _rng()), torus_grid)

    def test_single_level(self, torus_grid):
        with pytest.raises(ValueError):
            identity_convergence("W1", torus_grid, levels=1)


class TestPoincare:
    @pytest.mark.parametrize("grid_name,constant", [("torus_grid", 1 / math.sqrt(2)), ("half_plane_grid", 0.5)])
    def test_inequality(self, request, grid_name, constant):
        grid = request.getfixturevalue(grid_name)
        check = poincare_2form_check(sample_field(TWO_FORM, grid, _rng()), grid)
        assert check.constant == pytest.approx(constant)
        assert check.satisfied
        assert check.lhs > 0

    def test_support_must_be_interior(self, torus_grid):
        components = np.zeros(torus_grid.shape + (3, 3))
        components[..., 0, 1] = 1.0
        components[..., 1, 0] = -1.0
        with pytest.raises(ValueError):
            poincare_2form_check(TensorField(TWO_FORM, components), torus_grid)

    def test_needs_two_form(self, torus_grid):
        with pytest.raises(ValenceError):
            poincare_2form_check(sample_field(ONE_FORM, torus_grid, _rng()), torus_grid)


class TestAdjointness:
    def test_nabla(self, torus_grid):
        rng = _rng()
        u = sample_field(ONE_FORM, torus_grid, rng)
        v = sample_field(TENSOR2, torus_grid, rng)
        assert adjointness_defect("nabla", u, v, torus_grid) < 1e-2

    def test_exterior(self, torus_grid):
        rng = _rng()
        u = sample_field(ONE_FORM, torus_grid, rng)
        v = sample_field(TWO_FORM, torus_grid, rng)
        assert adjointness_defect("d", u, v, torus_grid) < 1e-2

    def test_range_mismatch(self, torus_grid):
        u = sample_field(ONE_FORM, torus_grid, _rng())
        with pytest.raises(ValenceError):
            adjointness_defect("nabla", u, u, torus_grid)

    def test_unknown_pair(self, torus_grid):
        u = sample_field(ONE_FORM, torus_grid, _rng())
        with pytest.raises(ValueError):
            adjointness_defect("curl", u, u, torus_grid)


class TestModeReduction:
    """The Coupled3 radial operator against ∇*∇ + 2 on the separated mode
    u = F(r) cos z e_r + W(r) sin z e_z (p = 0, λ′ = 1 on the circle of length 2π)"""

    INTERIOR = slice(3, -3)

    @staticmethod
    def _profiles(r):
        F = r**2 * np.exp(-r)
        dF = (2 * r - r**2) * np.exp(-r)
        d2F = (2 - 4 * r + r**2) * np.exp(-r)
        zero = np.zeros_like(r)
        U = np.stack([F, zero, np.cos(r)], axis=-1)
        dU = np.stack([dF, zero, -np.sin(r)], axis=-1)
        d2U = np.stack([d2F, zero, -np.cos(r)], axis=-1)
        return U, dU, d2U

    def _mismatch(self, torus_geometry, convention):
        grid = ChartGrid(torus_geometry, (96, 8, 256))
        r = grid.axis_coordinates(0)
        z = grid.coordinate(2)
        U, dU, d2U = self._profiles(r)
        components = np.zeros(grid.shape + (3,))
        components[..., 0] = U[:, 0].reshape(-1, 1, 1) * np.cos(z)
        components[..., 2] = U[:, 2].reshape(-1, 1, 1) * np.sin(z)
        result = covariant_apply("rough_shifted", TensorField(ONE_FORM, components), grid).components

        op = radial_operator(torus_geometry, Coupled3Block(lambda_prime=1.0, p=0), convention=convention)
        radial = (-d2U - op.P(r)[:, None] * dU + np.einsum("rij,rj->ri", op.Q(r), U)).real
        expected = np.zeros_like(result)
        expected[..., 0] = radial[:, 0].reshape(-1, 1, 1) * np.cos(z)
        expected[..., 2] = radial[:, 2].reshape(-1, 1, 1) * np.sin(z)
        difference = np.abs(result - expected)[self.INTERIOR]
        return float(np.max(difference)), float(np.max(np.abs(expected[self.INTERIOR])))

    def test_symmetric_coupling_matches(self, torus_geometry):
        error, scale = self._mismatch(torus_geometry, "symmetric")
        assert error <= 1e-3 * scale

    def test_printed_coupling_does_not(self, torus_geometry):
        error, scale = self._mismatch(torus_geometry, "printed")
        assert error > 1e-2 * scale
