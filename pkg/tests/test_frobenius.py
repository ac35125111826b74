import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cone_rigidity.models import ConeGeometry, Coupled2Block, Coupled3Block, ScalarBlock
from cone_rigidity.services.frobenius import (
    branch_residual,
    continue_branch,
    evaluate_branch,
    frobenius_branch,
    solution_basis,
)
from cone_rigidity.services.indicial import indicial_roots
from cone_rigidity.services.modes import radial_operator
from cone_rigidity.utils.errors import GeometryDomainError, SeriesOrderError


def _root(op, k):
    return next(root for root in indicial_roots(op.block, op.geometry.beta) if abs(root.k - k) < 1e-9)


def test_scalar_series_coefficients(torus_geometry, scalar):
    op = radial_operator(torus_geometry, scalar)
    branch = frobenius_branch(op, _root(op, 2.0), N=8)
    assert branch.a[0, 0] == pytest.approx(1.0)
    assert abs(branch.a[1, 0]) < 1e-14
    assert branch.a[2, 0].real == pytest.approx(-1 / 6, rel=1e-12)
    assert branch.log_degree == 0


def test_scalar_branch_value(torus_geometry, scalar):
    op = radial_operator(torus_geometry, scalar)
    branch = frobenius_branch(op, _root(op, 2.0))
    value = evaluate_branch(branch, 0.1).values[0]
    assert value.real == pytest.approx(0.01 * (1 - 0.01 / 6), abs=1e-7)


def test_order_too_small(torus_geometry, scalar):
    op = radial_operator(torus_geometry, scalar)
    with pytest.raises(SeriesOrderError):
        frobenius_branch(op, _root(op, 2.0), N=3)


def test_log_branch_only_for_incomplete_roots(torus_geometry, coupled3):
    op = radial_operator(torus_geometry, coupled3)
    with pytest.raises(ValueError):
        frobenius_branch(op, _root(op, 3.0), logarithmic=True)


def test_log_branch_at_zero(torus_geometry):
    op = radial_operator(torus_geometry, ScalarBlock(mu_prime=0.0, p_prime=0))
    root = _root(op, 0.0)
    branch = frobenius_branch(op, root, logarithmic=True)
    assert branch.logarithmic
    np.testing.assert_allclose(branch.b[0], root.leading_space[0])
    assert branch.log_degree == 1
    assert branch_residual(branch, op, 1e-2, relative=True) <= 1e-8


@pytest.mark.parametrize(
    "block", [Coupled3Block(lambda_prime=1.0, p=1), Coupled2Block(p=3), Coupled2Block(p=0), ScalarBlock(mu_prime=0.0, p_prime=0)]
)
def test_basis_size_and_residuals(torus_geometry, block):
    op = radial_operator(torus_geometry, block)
    branches = solution_basis(op)
    assert len(branches) == 2 * block.size
    for branch in branches:
        assert branch_residual(branch, op, 1e-2, relative=True) <= 1e-8
        nonzero = branch.a[0] if not branch.logarithmic else branch.b[0]
        np.testing.assert_allclose(nonzero, branch.leading_vector)


def test_residual_decays_with_radius(torus_geometry):
    op = radial_operator(torus_geometry, Coupled2Block(p=3))
    branch = frobenius_branch(op, _root(op, 7.0), N=9)
    r = np.array([0.2, 0.1])
    residuals = [branch_residual(branch, op, x) for x in r]
    slope = math.log(residuals[0] / residuals[1]) / math.log(2)
    assert slope == pytest.approx(branch.exponent + branch.order - 1, abs=0.5)


def test_evaluate_requires_positive_radius(torus_geometry, scalar):
    op = radial_operator(torus_geometry, scalar)
    branch = frobenius_branch(op, _root(op, 2.0))
    with pytest.raises(GeometryDomainError):
        evaluate_branch(branch, 0.0)


def test_beyond_validity_flag(torus_geometry, scalar):
    op = radial_operator(torus_geometry, scalar)
    branch = frobenius_branch(op, _root(op, 2.0))
    assert evaluate_branch(branch, 0.6).beyond_validity
    assert not evaluate_branch(branch, 0.3).beyond_validity


def test_series_accessor(torus_geometry, coupled3):
    op = radial_operator(torus_geometry, coupled3)
    branch = frobenius_branch(op, _root(op, 2.0))
    assert len(branch.series(0)) == 3
    with pytest.raises(ValueError):
        branch.series(2)


@pytest.mark.parametrize(
    "block,k",
    [
        (Coupled3Block(lambda_prime=1.0, p=1), 3.0),
        (Coupled3Block(lambda_prime=1.0, p=1), 2.0),
        (Coupled3Block(lambda_prime=1.0, p=1), 1.0),
        (Coupled3Block(lambda_prime=4.0, p=-1), 2.0),
        (Coupled2Block(p=3), 7.0),
        (Coupled2Block(p=3), 5.0),
        (Coupled2Block(p=1), 1.0),
        (Coupled2Block(p=1), 3.0),
        (ScalarBlock(mu_prime=0.0, p_prime=1), 2.0),
        (ScalarBlock(mu_prime=0.0, p_prime=2), 4.0),
        (ScalarBlock(mu_prime=1.5, p_prime=1), 2.0),
        (ScalarBlock(mu_prime=0.0, p_prime=0), 0.0),
    ],
)
def test_continuation_matches_independent_integration(torus_geometry, block, k):
    op = radial_operator(torus_geometry, block)
    branch = frobenius_branch(op, _root(op, k))
    continued = continue_branch(branch, op, 0.4)

    # independent integration seeded further in, from the same series
    start = evaluate_branch(branch, 5e-3)
    m = op.size

    def rhs(r, y):
        u, du = y[:m], y[m:]
        return np.concatenate([du, -op.P(r) * du + op.Q(r) @ u])

    reference = solve_ivp(
        rhs, (5e-3, 0.4), np.concatenate([start.values, start.derivatives]), method="DOP853", rtol=1e-12,
        atol=1e-14 * np.max(np.abs(np.concatenate([start.values, start.derivatives]))),
    )
    assert reference.success
    expected = reference.y[:m, -1]
    assert np.linalg.norm(continued.values - expected) <= 1e-6 * np.linalg.norm(expected)


@pytest.mark.parametrize("beta", [0.8, 1.5, 2.0, 3.7])
@pytest.mark.parametrize("p", [-2, -1, 0, 1, 2])
def test_basis_residuals_across_angles(beta, p):
    geom = ConeGeometry(n=3, beta=beta)
    for block in (Coupled3Block(lambda_prime=1.0, p=p), Coupled2Block(p=p), ScalarBlock(mu_prime=0.0, p_prime=p)):
        op = radial_operator(geom, block)
        branches = solution_basis(op, 16, skip_unsupported=True)
        assert branches
        for branch in branches:
            assert branch_residual(branch, op, 0.05, relative=True) <= 1e-8, (block.label, branch.exponent)
