"""
Frobenius solutions of the radial systems near r = 0

A branch is u = Σ_m r^{k+m} (a_m + ln r · b_m).  Writing r·P = Σ p_j r^j and
r²·Q = Σ Q_j r^j, the coefficients solve

    Σ_j B_j(k+m−j) b_{m−j} = 0
    Σ_j B_j(k+m−j) a_{m−j} + B_j′(k+m−j) b_{m−j} = 0

with B_0(s) = M(s) = −s² + Q_0 and B_j(s) = −p_j s + Q_j.  At a resonant
order M(k+m) is singular; the free component is set to zero and a ln r term
is added when the right-hand side has a component along the kernel.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from cone_rigidity.config import settings
from cone_rigidity.services.indicial import IndicialRoot, indicial_roots
from cone_rigidity.services.modes import RadialOperator
from cone_rigidity.services.series import LogSeries, TruncatedSeries
from cone_rigidity.utils.errors import (
    GeometryDomainError,
    InternalCheckError,
    SeriesOrderError,
    UnsupportedResonanceError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FrobeniusBranch:
    operator: RadialOperator
    exponent: float
    family: str
    leading_vector: np.ndarray
    a: np.ndarray
    b: np.ndarray
    logarithmic: bool = False
    resonances: Tuple[int, ...] = field(default=())

    @property
    def block(self):
        return self.operator.block

    @property
    def order(self) -> int:
        return self.a.shape[0] - 1

    @property
    def size(self) -> int:
        return self.a.shape[1]

    @property
    def log_degree(self) -> int:
        return int(bool(np.any(self.b != 0)))

    @property
    def label(self) -> str:
        tag = " log" if self.logarithmic else ""
        return f"{self.block.label} k={self.exponent:.6g} [{self.family}{tag}]"

    def series(self, ell: int) -> List[TruncatedSeries]:
        """The m-vector of series multiplying r^k (ln r)^ell"""
        coefficients = self.a if ell == 0 else self.b
        if ell not in (0, 1):
            raise ValueError("Log ladders are capped at degree 1")
        return [TruncatedSeries.from_coefficients(coefficients[:, c]) for c in range(self.size)]

    def component(self, c: int) -> LogSeries:
        return LogSeries(
            self.exponent,
            TruncatedSeries.from_coefficients(self.a[:, c]),
            TruncatedSeries.from_coefficients(self.b[:, c]),
        )

    @classmethod
    def zero(cls, operator: RadialOperator, N: int, exponent: float = 0.0) -> "FrobeniusBranch":
        m = operator.size
        return cls(
            operator=operator,
            exponent=exponent,
            family="zero",
            leading_vector=np.zeros(m, dtype=complex),
            a=np.zeros((N + 1, m), dtype=complex),
            b=np.zeros((N + 1, m), dtype=complex),
        )


@dataclass(frozen=True)
class BranchValue:
    values: np.ndarray
    derivatives: np.ndarray
    beyond_validity: bool = False


def _kernel_split(matrix: np.ndarray, tol: float):
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    singular = np.abs(eigenvalues) <= tol
    kernel = eigenvectors[:, singular]

    def pinv(x: np.ndarray) -> np.ndarray:
        regular = eigenvectors[:, ~singular]
        return regular @ ((regular.conj().T @ x) / eigenvalues[~singular])

    return kernel, pinv


def frobenius_branch(
    op: RadialOperator,
    root: IndicialRoot,
    N: Optional[int] = None,
    leading_index: int = 0,
    logarithmic: bool = False,
) -> FrobeniusBranch:
    N = settings.FROBENIUS_ORDER if N is None else N
    if N < 4:
        raise SeriesOrderError(f"Frobenius order must be at least 4, got {N}")
    if logarithmic and not root.log_required:
        raise ValueError(f"Root k={root.k} has a complete leading space; no log branch")
    if logarithmic and abs(root.k) > 1e-12:
        raise UnsupportedResonanceError(f"Log branch at nonzero root k={root.k}")

    k = root.k
    m = op.size
    identity = np.eye(m)
    p, q = op.radial_coefficients(N)
    v0 = np.asarray(root.leading_space[leading_index], dtype=complex)
    a = np.zeros((N + 1, m), dtype=complex)
    b = np.zeros((N + 1, m), dtype=complex)
    if logarithmic:
        b[0] = v0
    else:
        a[0] = v0

    def B(j: int, s: float) -> np.ndarray:
        if j == 0:
            return -s * s * identity + q[0]
        return -p[j] * s * identity + q[j]

    def dB(j: int, s: float) -> np.ndarray:
        if j == 0:
            return -2 * s * identity
        return -p[j] * identity

    q0_scale = max(1.0, float(np.max(np.abs(q[0]))))
    resonances = []
    for order in range(1, N + 1):
        s = k + order
        rhs_b = np.zeros(m, dtype=complex)
        rhs_a = np.zeros(m, dtype=complex)
        for j in range(1, order + 1):
            s_j = k + order - j
            rhs_b -= B(j, s_j) @ b[order - j]
            rhs_a -= B(j, s_j) @ a[order - j] + dB(j, s_j) @ b[order - j]

        matrix = B(0, s)
        kernel, pinv = _kernel_split(matrix, settings.RESONANCE_TOL * max(q0_scale, s * s))
        if kernel.shape[1] == 0:
            b[order] = np.linalg.solve(matrix, rhs_b)
            a[order] = np.linalg.solve(matrix, rhs_a + 2 * s * b[order])
            continue

        resonances.append(order)
        rhs_tol = settings.RESONANCE_TOL * max(1.0, np.linalg.norm(rhs_a), np.linalg.norm(rhs_b))
        if np.any(np.abs(kernel.conj().T @ rhs_b) > rhs_tol):
            raise UnsupportedResonanceError(
                f"{op.block.label}: resonance at k+{order}={s:.6g} needs a ln² r term"
            )
        b_order = pinv(rhs_b)
        projection = kernel.conj().T @ (rhs_a + 2 * s * b_order)
        if np.any(np.abs(projection) > rhs_tol):
            if abs(s) < settings.RESONANCE_TOL:
                raise UnsupportedResonanceError(
                    f"{op.block.label}: resonance at exponent 0 from k={k:.6g} needs a ln² r term"
                )
            b_order = b_order + kernel @ (-projection / (2 * s))
            logger.info(f"{op.block.label}: log ladder enters at order {order} of branch k={k:.6g}")
        b[order] = b_order
        a[order] = pinv(rhs_a + 2 * s * b_order)

    return FrobeniusBranch(
        operator=op,
        exponent=k,
        family=root.families[leading_index],
        leading_vector=v0,
        a=a,
        b=b,
        logarithmic=logarithmic,
        resonances=tuple(resonances),
    )


def solution_basis(
    op: RadialOperator, N: Optional[int] = None, skip_unsupported: bool = False
) -> List[FrobeniusBranch]:
    """All 2m independent branches of a block, log branches included.

    With skip_unsupported, a root whose branch would need a ln² r term is
    logged and left out instead of aborting the whole block.
    """
    branches = []
    skipped = 0
    for root in indicial_roots(op.block, op.geometry.beta):
        requests = [(index, False) for index in range(root.dimension)]
        requests += [(0, True)] * (root.multiplicity - root.dimension)
        for index, logarithmic in requests:
            try:
                branches.append(
                    frobenius_branch(op, root, N, leading_index=index, logarithmic=logarithmic)
                )
            except UnsupportedResonanceError as e:
                if not skip_unsupported:
                    raise
                skipped += 1
                logger.warning(f"Skipping root k={root.k:.6g}: {e}")
    if len(branches) + skipped != 2 * op.size:
        raise InternalCheckError(
            f"{op.block.label}: {len(branches)} branches for a system of size {op.size}"
        )
    return branches


def _terms(branch: FrobeniusBranch, r: float):
    if r <= 0:
        raise GeometryDomainError(f"Branch evaluation needs r > 0, got {r}")
    powers = branch.exponent + np.arange(branch.order + 1)
    log_r = np.log(r)
    return powers, r ** powers, log_r


def evaluate_branch(
    branch: FrobeniusBranch, r: float, validity_radius: Optional[float] = None
) -> BranchValue:
    validity_radius = settings.VALIDITY_RADIUS if validity_radius is None else validity_radius
    powers, rs, log_r = _terms(branch, r)
    values = rs @ (branch.a + log_r * branch.b)
    derivatives = (rs / r) @ (powers[:, None] * (branch.a + log_r * branch.b) + branch.b)
    beyond = r > validity_radius
    if beyond:
        logger.warning(f"{branch.label}: evaluated at r={r} beyond validity radius {validity_radius}")
    return BranchValue(values=values, derivatives=derivatives, beyond_validity=beyond)


def _second_derivative(branch: FrobeniusBranch, r: float) -> np.ndarray:
    powers, rs, log_r = _terms(branch, r)
    s = powers[:, None]
    return (rs / (r * r)) @ (
        s * (s - 1) * (branch.a + log_r * branch.b) + (2 * s - 1) * branch.b
    )


def branch_residual(
    branch: FrobeniusBranch, op: RadialOperator, r: float, relative: bool = False
) -> float:
    """|−u″ − P u′ + Q u| at r with closed-form P, Q.

    The relative form divides by the sum of the magnitudes of the three terms.
    """
    value = evaluate_branch(branch, r, validity_radius=np.inf)
    u, du = value.values, value.derivatives
    d2u = _second_derivative(branch, r)
    residual = float(np.linalg.norm(op.apply(r, u, du, d2u)))
    if not relative:
        return residual
    scale = (
        float(np.linalg.norm(d2u))
        + abs(float(op.P(r))) * float(np.linalg.norm(du))
        + float(np.linalg.norm(op.Q(r) @ u))
    )
    return residual / scale if scale > 0 else 0.0


def continue_branch(
    branch: FrobeniusBranch,
    op: RadialOperator,
    r_end: float,
    r_start: float = 1e-2,
    rtol: float = 1e-12,
) -> BranchValue:
    """Integrate the radial system from series data at r_start out to r_end (DOP853)"""
    start = evaluate_branch(branch, r_start)
    m = op.size
    y0 = np.concatenate([start.values, start.derivatives])
    atol = 1e-14 * max(float(np.max(np.abs(y0))), 1e-300)

    def rhs(r, y):
        u, du = y[:m], y[m:]
        d2u = -op.P(r) * du + op.Q(r) @ u
        return np.concatenate([du, d2u])

    solution = solve_ivp(rhs, (r_start, r_end), y0, method="DOP853", rtol=rtol, atol=atol)
    if not solution.success:
        raise InternalCheckError(f"{branch.label}: continuation failed ({solution.message})")
    y = solution.y[:, -1]
    return BranchValue(values=y[:m], derivatives=y[m:], beyond_validity=False)
