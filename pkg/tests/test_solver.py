import math

import numpy as np
import pytest

from cone_rigidity.models import ConeGeometry, Coupled2Block, Coupled3Block, ScalarBlock
from cone_rigidity.services.modes import radial_operator
from cone_rigidity.services.solver import (
    RadialMesh,
    graded_mesh,
    kernel_audit,
    manufactured_convergence,
    manufactured_profile,
    manufactured_rhs,
    mode_eigmin,
    pointwise_residual,
    solve_field,
    solve_mode,
)
from cone_rigidity.utils.errors import AngleConditionError, SolverError

BLOCKS = [Coupled3Block(lambda_prime=1.0, p=1), Coupled2Block(p=3), ScalarBlock(mu_prime=0.0, p_prime=1)]


def _bump(r):
    return np.exp(-((r - 0.5) ** 2) / 0.02)


class TestMesh:
    def test_uniform_nodes(self):
        np.testing.assert_allclose(RadialMesh(1.0, 4, 1.0).nodes, [0.25, 0.5, 0.75, 1.0])

    def test_graded_nodes(self):
        np.testing.assert_allclose(RadialMesh(1.0, 4, 2.0).nodes, [0.0625, 0.25, 0.5625, 1.0])

    def test_first_node(self):
        mesh = graded_mesh(0.5, 256)
        assert mesh.nodes[0] == pytest.approx(0.5 / 256 ** 2)
        assert mesh.nodes[-1] == pytest.approx(0.5)

    @pytest.mark.parametrize("args", [(0.0, 64), (1.0, 8), (1.0, 64, 0.5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            graded_mesh(*args)


class TestEigmin:
    @pytest.mark.parametrize("block", BLOCKS)
    def test_lower_bound(self, torus_geometry, block):
        eigmin = mode_eigmin(radial_operator(torus_geometry, block), graded_mesh(1.0, 128))
        assert eigmin >= torus_geometry.n - 1 - 1e-2

    def test_shift_is_additive(self, torus_geometry, scalar):
        op = radial_operator(torus_geometry, scalar)
        mesh = graded_mesh(1.0, 64)
        assert mode_eigmin(op, mesh, shift=1.5) - mode_eigmin(op, mesh) == pytest.approx(1.5, rel=1e-8)

    def test_printed_convention_rejected(self, torus_geometry, coupled3):
        op = radial_operator(torus_geometry, coupled3, convention="printed")
        with pytest.raises(SolverError):
            mode_eigmin(op, graded_mesh(1.0, 64))

    def test_angle_condition(self, witness_geometry, scalar):
        with pytest.raises(AngleConditionError):
            mode_eigmin(radial_operator(witness_geometry, scalar), graded_mesh(1.0, 64))

    def test_needs_shifted_form(self, torus_geometry, scalar):
        with pytest.raises(ValueError):
            mode_eigmin(radial_operator(torus_geometry, scalar, "nabla_star_nabla"), graded_mesh(1.0, 64))


class TestManufactured:
    def test_second_order_for_scalar(self, torus_geometry, scalar):
        result = manufactured_convergence(radial_operator(torus_geometry, scalar), points=(64, 128, 256))
        assert 1.7 <= result["order"] <= 2.3

    @pytest.mark.parametrize("block", [Coupled3Block(lambda_prime=1.0, p=1), Coupled2Block(p=3)])
    def test_second_order_for_coupled(self, torus_geometry, block):
        result = manufactured_convergence(radial_operator(torus_geometry, block), points=(64, 128, 256))
        errors = result["errors"]
        assert errors[0] > errors[1] > errors[2]
        assert 1.7 <= result["order"] <= 2.3

    def test_residual_of_exact_profile_decreases(self, torus_geometry, scalar):
        op = radial_operator(torus_geometry, scalar)
        u0, du0, d2u0 = manufactured_profile(1.0)
        rhs = manufactured_rhs(op, u0, du0, d2u0)
        residuals = []
        for M in (64, 256):
            mesh = graded_mesh(1.0, M)
            residuals.append(pointwise_residual(op, mesh, u0(mesh.nodes)[:, None], rhs).max())
        assert residuals[1] < residuals[0]


class TestSolve:
    def test_zero_rhs(self, torus_geometry, scalar):
        solution = solve_mode(radial_operator(torus_geometry, scalar), None, graded_mesh(1.0, 64))
        assert solution.max_abs == 0.0
        assert solution.solution_norm == 0.0

    def test_inner_match_uses_admissible_branches(self, torus_geometry, scalar):
        solution = solve_mode(radial_operator(torus_geometry, scalar), _bump, graded_mesh(1.0, 128))
        assert solution.inner_match.exponents == pytest.approx([2.0])
        assert solution.eigmin >= 2 - 1e-2

    def test_field_norms_combine(self, torus_geometry):
        field = solve_field(torus_geometry, BLOCKS, [_bump] * 3, graded_mesh(1.0, 128))
        assert len(field.solutions) == 3
        assert field.solution_norm == pytest.approx(math.hypot(*[s.solution_norm for s in field.solutions]))
        assert field.rhs_norm == pytest.approx(math.hypot(*[s.rhs_norm for s in field.solutions]))
        assert field.bound_holds
        for solution in field.solutions:
            assert solution.solution_norm <= solution.rhs_norm / field.shift * (1 + 1e-9), solution.block.label

    def test_rhs_count_must_match(self, torus_geometry):
        with pytest.raises(ValueError):
            solve_field(torus_geometry, BLOCKS, [_bump])


class TestKernelAudit:
    def test_excluded_angle(self, scalar):
        with pytest.raises(AngleConditionError):
            kernel_audit(ConeGeometry(n=3, beta=1.0), [scalar])

    def test_witness_mode(self, witness_geometry, coupled3):
        report = kernel_audit(witness_geometry, [coupled3])
        assert report.mode == "witness"
        assert report.failure_witnesses
        assert not report.kernel_free
        assert report.verdict.startswith("witness")

    def test_rigidity(self, torus_geometry):
        blocks = BLOCKS + [ScalarBlock(mu_prime=0.0, p_prime=0)]
        report = kernel_audit(torus_geometry, blocks, graded_mesh(1.0, 128))
        assert report.mode == "rigidity"
        assert report.kernel_free
        assert report.verdict == "no admissible kernel mode"
        assert [b.admissible_dimension for b in report.blocks] == [3, 2, 1, 1]
        assert len(report.log_mode_witnesses) == 1
