"""
Indicial matrices and roots of the radial systems at r = 0

M(k) = −k²·I + Q₀ where Q₀ is the r⁻² coefficient of Q.  The roots are known
in closed form (±pβ±1, ±pβ for coupled blocks, ±p′β for scalar blocks) and
are checked against M(k) instead of being searched for numerically.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from cone_rigidity.models import AnyBlock, Coupled3Block, ScalarBlock
from cone_rigidity.utils.errors import InternalCheckError

logger = logging.getLogger(__name__)

ROOT_TOL = 1e-9

# leading-vector families
PLUS_ONE = "plus_one"    # ±(pβ+1), (1, −i, 0)
MINUS_ONE = "minus_one"  # ±(pβ−1), (1, i, 0)
OMEGA = "omega"          # ±pβ, (0, 0, 1)
SCALAR = "scalar"        # ±p′β, (1)


@dataclass(frozen=True, eq=False)
class IndicialRoot:
    k: float
    leading_space: Tuple[np.ndarray, ...]
    families: Tuple[str, ...]
    multiplicity: int
    log_required: bool

    @property
    def dimension(self) -> int:
        return len(self.leading_space)


def indicial_matrix(block: AnyBlock, k: float, beta: float) -> np.ndarray:
    p_beta = block.frequency(beta)
    if isinstance(block, ScalarBlock):
        return np.array([[-k * k + p_beta ** 2]], dtype=complex)
    diagonal = -k * k + 1 + p_beta ** 2
    coupling = 2j * p_beta
    matrix = np.array(
        [
            [diagonal, coupling, 0],
            [-coupling, diagonal, 0],
            [0, 0, -k * k + p_beta ** 2],
        ],
        dtype=complex,
    )
    return matrix[: block.size, : block.size]


def _candidates(block: AnyBlock, beta: float) -> List[Tuple[float, str, np.ndarray]]:
    p_beta = block.frequency(beta)
    if isinstance(block, ScalarBlock):
        one = np.array([1.0], dtype=complex)
        return [(p_beta, SCALAR, one), (-p_beta, SCALAR, one)]
    plus = np.array([1.0, -1j, 0.0], dtype=complex)[: block.size]
    minus = np.array([1.0, 1j, 0.0], dtype=complex)[: block.size]
    out = [
        (p_beta + 1, PLUS_ONE, plus),
        (-(p_beta + 1), PLUS_ONE, plus),
        (p_beta - 1, MINUS_ONE, minus),
        (-(p_beta - 1), MINUS_ONE, minus),
    ]
    if isinstance(block, Coupled3Block):
        omega = np.array([0.0, 0.0, 1.0], dtype=complex)
        out += [(p_beta, OMEGA, omega), (-p_beta, OMEGA, omega)]
    return out


def _independent(vectors: List[np.ndarray]) -> List[int]:
    """Indices of a maximal linearly independent subset, in order"""
    keep: List[int] = []
    for i, v in enumerate(vectors):
        trial = np.array([vectors[j] for j in keep] + [v])
        if np.linalg.matrix_rank(trial, tol=1e-10) > len(keep):
            keep.append(i)
    return keep


def indicial_roots(block: AnyBlock, beta: float) -> List[IndicialRoot]:
    """All roots grouped by value, sorted by descending k"""
    candidates = sorted(_candidates(block, beta), key=lambda c: -c[0])
    groups: List[List[Tuple[float, str, np.ndarray]]] = []
    for candidate in candidates:
        if groups and abs(groups[-1][0][0] - candidate[0]) <= ROOT_TOL * max(1.0, abs(candidate[0])):
            groups[-1].append(candidate)
        else:
            groups.append([candidate])

    roots = []
    for group in groups:
        k = float(np.mean([c[0] for c in group]))
        if abs(k) < ROOT_TOL:
            k = 0.0
        keep = _independent([c[2] for c in group])
        roots.append(
            IndicialRoot(
                k=k,
                leading_space=tuple(group[i][2] for i in keep),
                families=tuple(group[i][1] for i in keep),
                multiplicity=len(group),
                log_required=len(group) > len(keep),
            )
        )
    verify_roots(block, beta, roots)
    return roots


def verify_roots(block: AnyBlock, beta: float, roots: List[IndicialRoot]) -> None:
    """Check det M(k) = 0 and M(k)v₀ = 0 for every root; raise on a transcription error"""
    total = 0
    for root in roots:
        matrix = indicial_matrix(block, root.k, beta)
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if abs(np.linalg.det(matrix)) > 1e-9 * scale ** block.size:
            raise InternalCheckError(f"{block.label}: det M({root.k}) does not vanish")
        for v in root.leading_space:
            if np.linalg.norm(matrix @ v) > 1e-12 * scale:
                raise InternalCheckError(f"{block.label}: leading vector {v} not in ker M({root.k})")
        total += root.multiplicity
    if total != 2 * block.size:
        raise InternalCheckError(f"{block.label}: root multiplicities sum to {total}, expected {2 * block.size}")
