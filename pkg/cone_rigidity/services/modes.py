"""
Mode blocks and their radial operators

Each block reduces ∇*∇u (or L u = ∇*∇u + (n−1)u) to −u″ − P(r)u′ + Q(r)u,
with P = coth r + (n−2) tanh r and Q built from the frame component
expressions of the rough Laplacian.  Blocks for n = 3 come exactly from the
flat torus; for n ≥ 4 they are read from an eigendata file.
"""

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, List, Sequence, Tuple, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from cone_rigidity.config import settings
from cone_rigidity.models import (
    AnyBlock,
    CircleCrossSection,
    ConeGeometry,
    Coupled2Block,
    Coupled3Block,
    ModeBlock,
    ScalarBlock,
)
from cone_rigidity.services.series import CLOSED_FORMS, TruncatedSeries, coefficient_expansion
from cone_rigidity.utils.errors import EigendataParseError, EigendataValidationError

logger = logging.getLogger(__name__)

_BLOCK_ADAPTER = TypeAdapter(ModeBlock)

# pydantic error types that mean the record itself is malformed
_STRUCTURAL_ERRORS = {
    "missing",
    "extra_forbidden",
    "union_tag_invalid",
    "union_tag_not_found",
    "model_type",
    "model_attributes_type",
    "dict_type",
    "int_parsing",
    "int_from_float",
    "int_type",
    "float_parsing",
    "float_type",
    "literal_error",
    "string_type",
}


class OperatorForm(str, Enum):
    NABLA_STAR_NABLA = "nabla_star_nabla"
    L = "L"


class CouplingConvention(str, Enum):
    """Sign of the f/ω coupling of Coupled3 blocks.

    SYMMETRIC uses +2 tanh r √λ′/cosh r in both the f-row and the ω-row, the
    self-adjoint form for the orientation of φ in which the f-row entry is
    +2 tanh r √λ′/cosh r.  PRINTED keeps −2 tanh r √λ′/cosh r in the ω-row;
    it is not Hermitian and only kept for comparison.
    """
    SYMMETRIC = "symmetric"
    PRINTED = "printed"


class _ClosedForm:
    """Pointwise coefficient functions on an array of radii"""

    def __init__(self, r):
        r = np.asarray(r, dtype=float)
        self.zero = np.zeros_like(r)
        self.coth2 = CLOSED_FORMS["coth"](r) ** 2
        self.tanh2 = np.tanh(r) ** 2
        self.csch2 = CLOSED_FORMS["csch2"](r)
        self.sech2 = CLOSED_FORMS["sech2"](r)
        self.coth_csch = CLOSED_FORMS["coth"](r) * CLOSED_FORMS["inv_sinh"](r)
        self.tanh_sech = CLOSED_FORMS["tanh_sech"](r)


class _SeriesForm:
    """The same coefficient functions as truncated series at r = 0"""

    def __init__(self, order: int):
        coth = coefficient_expansion("coth", order)
        tanh = coefficient_expansion("tanh", order)
        self.zero = TruncatedSeries.zero(order + 2)
        self.coth2 = coth * coth
        self.tanh2 = tanh * tanh
        self.csch2 = coefficient_expansion("csch2", order)
        self.sech2 = coefficient_expansion("sech2", order)
        self.coth_csch = coth * coefficient_expansion("inv_sinh", order)
        self.tanh_sech = coefficient_expansion("tanh_sech", order)


def _coupled_entries(fn, n: int, p_beta: float, lambda_prime: float, convention, size: int):
    p2b2 = float(p_beta) ** 2
    lam = float(lambda_prime)
    f_diag = fn.coth2 + fn.tanh2 * float(n - 2) + fn.csch2 * p2b2 + fn.sech2 * lam
    g_diag = fn.coth2 + fn.csch2 * p2b2 + fn.sech2 * lam
    fg = fn.coth_csch * complex(0, 2 * p_beta)
    gf = fn.coth_csch * complex(0, -2 * p_beta)
    if size == 2:
        return [[f_diag, fg], [gf, g_diag]]
    w_diag = fn.tanh2 + fn.csch2 * p2b2 + fn.sech2 * (lam + n - 3)
    coupling = 2.0 * math.sqrt(lam)
    fw = fn.tanh_sech * coupling
    wf = fn.tanh_sech * (coupling if CouplingConvention(convention) is CouplingConvention.SYMMETRIC else -coupling)
    return [[f_diag, fg, fw], [gf, g_diag, fn.zero], [wf, fn.zero, w_diag]]


def _scalar_entries(fn, p_beta: float, mu_prime: float):
    return [[fn.tanh2 + fn.csch2 * float(p_beta) ** 2 + fn.sech2 * float(mu_prime)]]


def _stack(entries) -> np.ndarray:
    rows = [np.stack([np.asarray(e, dtype=complex) for e in row], axis=-1) for row in entries]
    return np.stack(rows, axis=-2)


def coupled_potential(
    r,
    n: int,
    p_beta: float,
    lambda_prime: float,
    convention: Union[str, CouplingConvention] = CouplingConvention.SYMMETRIC,
    size: int = 3,
) -> np.ndarray:
    """Closed-form Q(r) (no shift) of the coupled blocks, shape r.shape + (size, size)"""
    return _stack(_coupled_entries(_ClosedForm(r), n, p_beta, lambda_prime, convention, size))


@dataclass(frozen=True)
class RadialOperator:
    """−u″ − P(r)u′ + Q(r)u for one mode block, Q including (n−1)·I in the L form"""
    geometry: ConeGeometry
    block: AnyBlock
    form: OperatorForm = OperatorForm.L
    convention: CouplingConvention = CouplingConvention.SYMMETRIC

    @property
    def size(self) -> int:
        return self.block.size

    @property
    def include_shift(self) -> bool:
        return OperatorForm(self.form) is OperatorForm.L

    @property
    def shift(self) -> float:
        return float(self.geometry.n - 1) if self.include_shift else 0.0

    @property
    def p_beta(self) -> float:
        return self.block.frequency(self.geometry.beta)

    @property
    def is_self_adjoint(self) -> bool:
        return not (
            isinstance(self.block, Coupled3Block)
            and CouplingConvention(self.convention) is CouplingConvention.PRINTED
        )

    def _entries(self, fn):
        n = self.geometry.n
        if isinstance(self.block, ScalarBlock):
            return _scalar_entries(fn, self.p_beta, self.block.mu_prime)
        return _coupled_entries(
            fn, n, self.p_beta, self.block.lambda_prime, self.convention, self.size
        )

    # -- pointwise form -----------------------------------------------

    def P(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 / np.tanh(r) + (self.geometry.n - 2) * np.tanh(r)

    def Q(self, r) -> np.ndarray:
        q = _stack(self._entries(_ClosedForm(r)))
        return q + self.shift * np.eye(self.size)

    def apply(self, r: float, u, du, d2u) -> np.ndarray:
        """−u″ − P u′ + Q u at a single radius"""
        u, du, d2u = (np.asarray(x, dtype=complex) for x in (u, du, d2u))
        return -d2u - self.P(r) * du + self.Q(r) @ u

    # -- series form --------------------------------------------------

    def P_series(self, N: int = None) -> TruncatedSeries:
        N = settings.SERIES_ORDER if N is None else N
        return coefficient_expansion("coth", N) + coefficient_expansion("tanh", N) * float(self.geometry.n - 2)

    def Q_series(self, N: int = None) -> List[List[TruncatedSeries]]:
        N = settings.SERIES_ORDER if N is None else N
        entries = self._entries(_SeriesForm(N))
        for i in range(self.size):
            entries[i][i] = entries[i][i] + self.shift
        return entries

    def radial_coefficients(self, N: int) -> Tuple[np.ndarray, np.ndarray]:
        """Taylor coefficients p_j of r·P and Q_j of r²·Q for j = 0..N"""
        order = N + 2
        rp = self.P_series(order).shift(1).dense(0, N)
        q = self.Q_series(order)
        r2q = np.zeros((N + 1, self.size, self.size), dtype=complex)
        for i in range(self.size):
            for j in range(self.size):
                r2q[:, i, j] = q[i][j].shift(2).dense(0, N)
        return rp, r2q

    def indicial_constant(self) -> np.ndarray:
        """Coefficient of r^{-2} in Q"""
        _, r2q = self.radial_coefficients(2)
        return r2q[0]


def radial_operator(
    geom: ConeGeometry,
    block: AnyBlock,
    form: Union[str, OperatorForm] = OperatorForm.L,
    convention: Union[str, CouplingConvention, None] = None,
) -> RadialOperator:
    convention = CouplingConvention(convention or settings.COUPLING_CONVENTION)
    return RadialOperator(geom, block, OperatorForm(form), convention)


# -- enumeration and ingestion ----------------------------------------


def circle_cross_section_modes(geom: ConeGeometry, p_max: int, q_max: int) -> List[AnyBlock]:
    """Exact blocks of the flat torus sinh²a dθ² + cosh²a dz² (z of period ℓ)"""
    if not isinstance(geom.cross_section, CircleCrossSection):
        raise ValueError("Circle mode generator needs an n = 3 circle cross-section")
    if p_max < 0 or q_max < 0:
        raise ValueError("Mode bounds must be nonnegative")
    length = geom.cross_section.length
    blocks: List[AnyBlock] = []
    for p in range(-p_max, p_max + 1):
        for q in range(-q_max, q_max + 1):
            if q != 0:
                blocks.append(Coupled3Block(lambda_prime=(2 * math.pi * q / length) ** 2, p=p))
            else:
                blocks.append(Coupled2Block(p=p))
                blocks.append(ScalarBlock(mu_prime=0.0, p_prime=p))
    blocks.sort(key=lambda b: b.key)
    logger.info(f"Generated {len(blocks)} circle cross-section blocks (p_max={p_max}, q_max={q_max})")
    return blocks


def _record_error(exc: ValidationError, line: int) -> Exception:
    errors = exc.errors()
    message = "; ".join(
        f"{'.'.join(str(x) for x in err.get('loc', ()))}: {err.get('msg')}" for err in errors
    )
    if any(err.get("type") in _STRUCTURAL_ERRORS for err in errors):
        return EigendataParseError(f"malformed record ({message})", line)
    return EigendataValidationError(message, line)


def _read_lines(path: Union[str, Path, IO[str]]) -> List[str]:
    if hasattr(path, "read"):
        return path.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


def load_cross_section_modes(path: Union[str, Path, IO[str]]) -> List[AnyBlock]:
    """Read eigendata: one canonical JSON object per line"""
    blocks: List[AnyBlock] = []
    for number, raw in enumerate(_read_lines(path), start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as e:
            raise EigendataParseError(f"invalid JSON ({e.msg})", number) from e
        if not isinstance(record, dict):
            raise EigendataParseError("record must be a JSON object", number)
        try:
            blocks.append(_BLOCK_ADAPTER.validate_python(record))
        except ValidationError as e:
            raise _record_error(e, number) from e
    if not blocks:
        logger.warning(f"Eigendata source {path} contains no mode records")
    else:
        logger.info(f"Loaded {len(blocks)} mode blocks from {path}")
    return blocks


def dump_cross_section_modes(blocks: Iterable[AnyBlock], path: Union[str, Path]) -> None:
    lines = [json.dumps(block.model_dump(), sort_keys=True) for block in blocks]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def sorted_blocks(blocks: Sequence[AnyBlock]) -> List[AnyBlock]:
    return sorted(blocks, key=lambda b: b.key)
