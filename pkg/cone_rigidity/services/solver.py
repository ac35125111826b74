"""
Radial boundary-value solver for L u = φ on the tube (0, a]

The scheme is the vertex-centred finite-volume discretization of the energy

    E(u) = ∫ w(r) (|u′|² + u*·Q(r)·u) dr,     w = volume_weight

on a graded mesh.  Flux weights w(r_{i+½})/h_i give a Hermitian stiffness
matrix and the lumped mass uses exact cell volumes, so the discrete problem
is A u = W φ with A Hermitian and W diagonal positive.  No flux is imposed
at r = 0, which selects the finite-energy (admissible) class; r = a carries
Dirichlet data.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from cone_rigidity.config import settings
from cone_rigidity.models import AnyBlock, ConeGeometry
from cone_rigidity.services.frobenius import evaluate_branch
from cone_rigidity.services.geometry import radial_volume, volume_weight
from cone_rigidity.services.l2class import (
    AdmissibleBasis,
    L2Report,
    admissible_basis,
    failure_witnesses,
)
from cone_rigidity.services.modes import RadialOperator, radial_operator
from cone_rigidity.utils.errors import AngleConditionError, SolverError

logger = logging.getLogger(__name__)

BETA_BOUNDARY_TOL = 1e-12
HERMITIAN_TOL = 1e-12

RhsFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RadialMesh:
    a: float
    M: int
    gamma: float = 2.0

    @property
    def nodes(self) -> np.ndarray:
        return self.a * (np.arange(1, self.M + 1) / self.M) ** self.gamma

    @property
    def midpoints(self) -> np.ndarray:
        r = self.nodes
        return 0.5 * (r[:-1] + r[1:])


@dataclass(frozen=True)
class InnerMatch:
    exponents: List[float]
    coefficients: np.ndarray
    relative_residual: float


@dataclass(frozen=True, eq=False)
class BVPSolution:
    mesh: RadialMesh
    block: AnyBlock
    values: np.ndarray
    solution_norm: float
    rhs_norm: float
    residual_norm: float
    linear_residual: float
    eigmin: Optional[float] = None
    inner_match: Optional[InnerMatch] = None

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass(frozen=True)
class FieldSolution:
    solutions: List[BVPSolution]
    solution_norm: float
    rhs_norm: float
    shift: float

    @property
    def bound_holds(self) -> bool:
        """‖α‖ ≤ ‖φ‖/(n−1), forced by L ≥ (n−1)"""
        return self.solution_norm <= self.rhs_norm / self.shift * (1 + 1e-9)


@dataclass
class BlockAudit:
    block: AnyBlock
    admissible_dimension: int
    total_branches: int
    admissible_exponents: List[float]
    eigmin: Optional[float] = None
    kernel_empty: Optional[bool] = None


@dataclass
class AuditReport:
    geometry: ConeGeometry
    mode: str
    blocks: List[BlockAudit] = field(default_factory=list)
    failure_witnesses: List[L2Report] = field(default_factory=list)
    log_mode_witnesses: List[L2Report] = field(default_factory=list)

    @property
    def kernel_free(self) -> bool:
        return self.mode == "rigidity" and all(b.kernel_empty for b in self.blocks)

    @property
    def verdict(self) -> str:
        if self.mode == "witness":
            return f"witness: {len(self.failure_witnesses)} admissible branches with grad u outside L2"
        if self.kernel_free:
            return "no admissible kernel mode"
        return "admissible kernel not excluded"


def graded_mesh(a: float, M: int, gamma: Optional[float] = None) -> RadialMesh:
    gamma = settings.MESH_GRADING if gamma is None else gamma
    if a <= 0:
        raise ValueError(f"Tube radius must be positive, got {a}")
    if M < 16:
        raise ValueError(f"Radial mesh needs at least 16 points, got {M}")
    if gamma < 1:
        raise ValueError(f"Grading power must be >= 1, got {gamma}")
    return RadialMesh(a=float(a), M=int(M), gamma=float(gamma))


def _check_operator(opL: RadialOperator) -> None:
    if not opL.include_shift:
        raise ValueError("The radial solver works with the L form (shift n-1 included)")
    if not opL.is_self_adjoint:
        raise SolverError(f"{opL.block.label}: coupling convention is not Hermitian; use 'symmetric'")
    beta = opL.geometry.beta
    if beta <= 1 + BETA_BOUNDARY_TOL:
        raise AngleConditionError(
            f"beta={beta} <= 1 (cone angle >= 2pi): the admissible class is not the ∇-domain; "
            "run the audit in witness mode for the D != D' branches"
        )


def _cell_weights(mesh: RadialMesh, n: int) -> np.ndarray:
    """Exact volumes of the dual cells [r_{i-½}, r_{i+½}] of the unknown nodes"""
    edges = np.concatenate([[0.0], mesh.midpoints])
    return np.diff(radial_volume(edges, n))


def _flux_weights(mesh: RadialMesh, n: int) -> np.ndarray:
    r = mesh.nodes
    return volume_weight(mesh.midpoints, n) / np.diff(r)


def _assemble(opL: RadialOperator, mesh: RadialMesh):
    """Stiffness A (sparse, unknowns ordered node-major) and lumped weights W"""
    n = opL.geometry.n
    m = opL.size
    r = mesh.nodes[:-1]
    count = r.size
    weights = _cell_weights(mesh, n)
    kappa = _flux_weights(mesh, n)

    q = opL.Q(r) * weights[:, None, None]
    diagonal_flux = kappa.copy()
    diagonal_flux[1:] += kappa[:-1]
    q += diagonal_flux[:, None, None] * np.eye(m)

    local = sp.block_diag(list(q), format="csr")
    coupling = sp.diags(-kappa[:-1], 1, shape=(count, count))
    coupling = sp.kron(coupling + coupling.T, sp.identity(m), format="csr")
    A = (local + coupling).tocsr()
    return A, weights, kappa


def _hermitian_defect(A) -> float:
    scale = max(float(abs(A).max()), 1e-300)
    return float(abs(A - A.conj().T).max()) / scale


def _band_eigmin(A, weights: np.ndarray, m: int) -> float:
    scale = 1.0 / np.sqrt(np.repeat(weights, m))
    S = sp.diags(scale) @ A @ sp.diags(scale)
    size = S.shape[0]
    band = np.zeros((m + 1, size), dtype=complex)
    for d in range(m + 1):
        band[m - d, d:] = S.diagonal(d)
    eigenvalues = scipy.linalg.eig_banded(
        band, lower=False, eigvals_only=True, select="i", select_range=(0, 0)
    )
    return float(eigenvalues[0])


def mode_eigmin(opL: RadialOperator, mesh: RadialMesh, shift: float = 0.0) -> float:
    """Smallest eigenvalue of A x = λ W x on the admissible class with Dirichlet at r = a"""
    _check_operator(opL)
    A, weights, _ = _assemble(opL, mesh)
    if shift:
        A = A + shift * sp.diags(np.repeat(weights, opL.size))
    return _band_eigmin(A, weights, opL.size)


def _nodal_rhs(rhs: Optional[RhsFunction], r: np.ndarray, m: int) -> np.ndarray:
    if rhs is None:
        return np.zeros((r.size, m), dtype=complex)
    values = np.asarray(rhs(r), dtype=complex)
    return np.broadcast_to(values.reshape(r.size, -1), (r.size, m)).copy()


def _weighted_norm(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * np.sum(np.abs(values) ** 2, axis=-1))))


def pointwise_residual(
    opL: RadialOperator, mesh: RadialMesh, values: np.ndarray, rhs: Optional[RhsFunction]
) -> np.ndarray:
    """|−u″ − P u′ + Q u − φ| at interior nodes r_2..r_{M−1} with three-point differences"""
    r = mesh.nodes
    u = np.asarray(values, dtype=complex)
    h_minus = r[1:-1] - r[:-2]
    h_plus = r[2:] - r[1:-1]
    denominator = (h_minus * h_plus * (h_minus + h_plus))[:, None]
    du = (
        h_minus[:, None] ** 2 * u[2:]
        - h_plus[:, None] ** 2 * u[:-2]
        + (h_plus ** 2 - h_minus ** 2)[:, None] * u[1:-1]
    ) / denominator
    d2u = 2 * (
        h_minus[:, None] * u[2:]
        - (h_minus + h_plus)[:, None] * u[1:-1]
        + h_plus[:, None] * u[:-2]
    ) / denominator
    interior = r[1:-1]
    applied = -d2u - opL.P(interior)[:, None] * du + np.einsum("nij,nj->ni", opL.Q(interior), u[1:-1])
    return np.linalg.norm(applied - _nodal_rhs(rhs, interior, opL.size), axis=-1)


def _inner_match(basis: AdmissibleBasis, mesh: RadialMesh, values: np.ndarray) -> InnerMatch:
    nodes = mesh.nodes[: settings.INNER_MATCH_NODES]
    target = values[: nodes.size].reshape(-1)
    exponents = [b.exponent for b in basis.branches]
    if not basis.branches:
        norm = np.linalg.norm(target)
        return InnerMatch(exponents, np.zeros(0, dtype=complex), 1.0 if norm > 0 else 0.0)
    columns = [
        np.concatenate([evaluate_branch(b, x).values for x in nodes]) for b in basis.branches
    ]
    design = np.stack(columns, axis=1)
    coefficients, *_ = np.linalg.lstsq(design, target, rcond=None)
    norm = np.linalg.norm(target)
    misfit = np.linalg.norm(design @ coefficients - target)
    return InnerMatch(exponents, coefficients, float(misfit / norm) if norm > 0 else 0.0)


def solve_mode(
    opL: RadialOperator,
    rhs: Optional[RhsFunction],
    mesh: RadialMesh,
    inner_bc: Optional[AdmissibleBasis] = None,
    outer_bc: Optional[Sequence[complex]] = None,
    certify: bool = True,
) -> BVPSolution:
    """Solve L u = φ for one block; inner_bc is only used for the reported inner match"""
    _check_operator(opL)
    m = opL.size
    n = opL.geometry.n
    A, weights, kappa = _assemble(opL, mesh)
    defect = _hermitian_defect(A)
    if defect > HERMITIAN_TOL:
        raise SolverError(f"{opL.block.label}: assembled matrix is not Hermitian (defect {defect:.2e})")

    r = mesh.nodes
    phi = _nodal_rhs(rhs, r, m)
    outer = np.zeros(m, dtype=complex) if outer_bc is None else np.asarray(outer_bc, dtype=complex)
    b = (weights[:, None] * phi[:-1]).astype(complex)
    b[-1] += kappa[-1] * outer
    b = b.reshape(-1)

    u = spsolve(A.tocsc(), b)
    linear_residual = float(np.linalg.norm(A @ u - b)) / max(1.0, float(np.linalg.norm(b)))
    if not np.all(np.isfinite(u)) or linear_residual > settings.LINEAR_RESIDUAL_TOL:
        raise SolverError(f"{opL.block.label}: linear solve failed (relative residual {linear_residual:.2e})")

    values = np.vstack([u.reshape(-1, m), outer[None, :]])
    residual = pointwise_residual(opL, mesh, values, rhs)
    residual_norm = _weighted_norm(residual[:, None], weights[1:])

    eigmin = _band_eigmin(A, weights, m) if certify else None
    if eigmin is not None and eigmin <= 0:
        raise SolverError(f"{opL.block.label}: discrete operator is not positive (eigmin {eigmin})")

    if inner_bc is None:
        inner_bc = admissible_basis(opL.block, opL.geometry, skip_unsupported=True)
    match = _inner_match(inner_bc, mesh, values)

    solution = BVPSolution(
        mesh=mesh,
        block=opL.block,
        values=values,
        solution_norm=_weighted_norm(values[:-1], weights),
        rhs_norm=_weighted_norm(phi[:-1], weights),
        residual_norm=residual_norm,
        linear_residual=linear_residual,
        eigmin=eigmin,
        inner_match=match,
    )
    logger.debug(
        f"{opL.block.label}: |u|={solution.solution_norm:.6g} |phi|={solution.rhs_norm:.6g} "
        f"(n={n}, M={mesh.M})"
    )
    return solution


# -- manufactured solutions -------------------------------------------


def manufactured_profile(a: float):
    """u₀ = r²(a − r) with its first two derivatives"""
    return (
        lambda r: r ** 2 * (a - r),
        lambda r: 2 * a * r - 3 * r ** 2,
        lambda r: 2 * a - 6 * r,
    )


def manufactured_rhs(
    opL: RadialOperator,
    u0: Callable,
    du0: Callable,
    d2u0: Callable,
    direction: Optional[Sequence[complex]] = None,
) -> RhsFunction:
    """φ = L u₀ in closed form for u₀(r)·direction"""
    m = opL.size
    e = np.zeros(m, dtype=complex)
    if direction is None:
        e[0] = 1.0
    else:
        e[:] = direction

    def rhs(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        u = u0(r)[:, None] * e
        du = du0(r)[:, None] * e
        d2u = d2u0(r)[:, None] * e
        return -d2u - opL.P(r)[:, None] * du + np.einsum("nij,nj->ni", opL.Q(r), u)

    return rhs


def manufactured_convergence(
    opL: RadialOperator, points: Sequence[int] = (64, 128, 256, 512), gamma: Optional[float] = None
) -> Dict[str, object]:
    """Max-norm errors against u₀ = r²(a − r) and the fitted order"""
    a = opL.geometry.tube_radius
    u0, du0, d2u0 = manufactured_profile(a)
    rhs = manufactured_rhs(opL, u0, du0, d2u0)
    errors = []
    for M in points:
        mesh = graded_mesh(a, M, gamma)
        solution = solve_mode(opL, rhs, mesh, inner_bc=AdmissibleBasis(opL.block, (), (), 0), certify=False)
        exact = u0(mesh.nodes)
        errors.append(float(np.max(np.abs(solution.values[:, 0] - exact))))
    order = -float(np.polyfit(np.log(points), np.log(errors), 1)[0])
    return {"points": list(points), "errors": errors, "order": order}


# -- audits and multi-mode solves -------------------------------------


def _default_mesh(geom: ConeGeometry, mesh: Optional[RadialMesh]) -> RadialMesh:
    return mesh or graded_mesh(geom.tube_radius, settings.MESH_POINTS, settings.MESH_GRADING)


def kernel_audit(
    geom: ConeGeometry,
    blocks: Sequence[AnyBlock],
    mesh: Optional[RadialMesh] = None,
    N: Optional[int] = None,
) -> AuditReport:
    """Per-block admissible dimension and eigmin; witness mode when beta < 1"""
    beta = geom.beta
    if abs(beta - 1) <= BETA_BOUNDARY_TOL:
        raise AngleConditionError("Cone angle 2pi (beta = 1) is excluded: the angle bound is strict")

    if beta < 1:
        logger.warning(f"beta={beta} < 1: auditing in witness mode")
        report = AuditReport(geometry=geom, mode="witness")
        report.failure_witnesses = failure_witnesses(geom, blocks, N)
        for block in blocks:
            basis = admissible_basis(block, geom, N, skip_unsupported=True)
            report.blocks.append(
                BlockAudit(block, basis.dimension, basis.total, basis.exponents)
            )
        return report

    mesh = _default_mesh(geom, mesh)
    shift = float(geom.n - 1)
    report = AuditReport(geometry=geom, mode="rigidity")
    for block in blocks:
        basis = admissible_basis(block, geom, N, skip_unsupported=True)
        eigmin = mode_eigmin(radial_operator(geom, block), mesh)
        report.blocks.append(
            BlockAudit(
                block=block,
                admissible_dimension=basis.dimension,
                total_branches=basis.total,
                admissible_exponents=basis.exponents,
                eigmin=eigmin,
                kernel_empty=eigmin >= shift - settings.EIGMIN_TOL,
            )
        )
        report.log_mode_witnesses += [
            r for r in basis.reports if r.quantities["u"].in_l2 and not r.quantities["du"].in_l2
        ]
    logger.info(f"Audit of {len(blocks)} blocks: {report.verdict}")
    return report


def solve_field(
    geom: ConeGeometry,
    blocks: Sequence[AnyBlock],
    rhs_coefficients: Sequence[Optional[RhsFunction]],
    mesh: Optional[RadialMesh] = None,
) -> FieldSolution:
    """Independent per-block solves; norms combine by Parseval"""
    if len(rhs_coefficients) != len(blocks):
        raise ValueError("One rhs function (or None) is needed per block")
    mesh = _default_mesh(geom, mesh)
    solutions = [
        solve_mode(radial_operator(geom, block), rhs, mesh)
        for block, rhs in zip(blocks, rhs_coefficients)
    ]
    field_solution = FieldSolution(
        solutions=solutions,
        solution_norm=float(np.sqrt(sum(s.solution_norm ** 2 for s in solutions))),
        rhs_norm=float(np.sqrt(sum(s.rhs_norm ** 2 for s in solutions))),
        shift=float(geom.n - 1),
    )
    if not field_solution.bound_holds:
        logger.warning(
            f"Norm bound violated: |u|={field_solution.solution_norm} > |phi|/(n-1)"
        )
    return field_solution
