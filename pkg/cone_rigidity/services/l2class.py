"""
Weighted-L² classification of Frobenius branches near the singular locus

The measure near r = 0 is volume_weight(r) dr ~ r dr, so a quantity with
leading behaviour r^e (ln r)^ℓ is square integrable iff e > −1.  Exponents
of u, du, δu, ∇u and ∇du are read off the derived series (primary path)
and compared with the closed-form exponent rules (secondary path).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cone_rigidity.config import settings
from cone_rigidity.models import AnyBlock, ConeGeometry, Coupled3Block, ScalarBlock
from cone_rigidity.services.frobenius import FrobeniusBranch, evaluate_branch, solution_basis
from cone_rigidity.services.geometry import volume_weight
from cone_rigidity.services.indicial import MINUS_ONE, OMEGA, PLUS_ONE, SCALAR
from cone_rigidity.services.modes import CouplingConvention, radial_operator
from cone_rigidity.services.series import LogSeries, coefficient_expansion
from cone_rigidity.utils.errors import ClassificationInconsistencyError, SeriesOrderError

logger = logging.getLogger(__name__)

QUANTITIES = ("u", "du", "delta_u", "grad_u", "grad_du")
EXPONENT_TOL = 1e-8


@dataclass(frozen=True)
class QuantityExponent:
    exponent: float
    log: bool
    in_l2: bool
    rule_exponent: Optional[float] = None
    rule_exact: Optional[bool] = None


@dataclass(frozen=True, eq=False)
class L2Report:
    block: AnyBlock
    branch: FrobeniusBranch
    quantities: Dict[str, QuantityExponent]

    @property
    def admissible(self) -> bool:
        return self.quantities["u"].in_l2 and self.quantities["du"].in_l2

    @property
    def nabla_route(self) -> bool:
        return self.quantities["u"].in_l2 and self.quantities["grad_u"].in_l2

    @property
    def d_delta_route(self) -> bool:
        return self.admissible and self.quantities["delta_u"].in_l2

    def exponent(self, quantity: str) -> float:
        return self.quantities[quantity].exponent


@dataclass(frozen=True, eq=False)
class DerivedFields:
    u: List[LogSeries]
    du: List[LogSeries]
    delta_u: List[LogSeries]
    grad_u: List[LogSeries]
    grad_du: List[LogSeries]


@dataclass(frozen=True)
class AdmissibleBasis:
    block: AnyBlock
    branches: Tuple[FrobeniusBranch, ...]
    reports: Tuple[L2Report, ...]
    total: int

    @property
    def dimension(self) -> int:
        return len(self.branches)

    @property
    def exponents(self) -> List[float]:
        return sorted(b.exponent for b in self.branches)


@dataclass(frozen=True)
class DecayProbe:
    t_values: np.ndarray
    integrals: np.ndarray
    slope: Optional[float]
    t_log_ratio: float = field(default=0.0)


class _Coefficients:
    """Series of the warp functions at the working order"""

    def __init__(self, order: int):
        self.coth = coefficient_expansion("coth", order)
        self.tanh = coefficient_expansion("tanh", order)
        self.inv_sinh = coefficient_expansion("inv_sinh", order)
        self.sech = coefficient_expansion("sech", order)


def _d(s: LogSeries) -> LogSeries:
    return s.differentiate()


def _coupled_fields(components, block, p_beta: float, n: int, c: _Coefficients) -> DerivedFields:
    f, g = components[0], components[1]
    ip = complex(0, p_beta)
    sqrt_n2 = math.sqrt(n - 2)
    coupled3 = isinstance(block, Coupled3Block)

    a = _d(g) + g * c.coth - f * c.inv_sinh * ip
    grad_u = [
        _d(f),
        _d(g),
        (f * ip) * c.inv_sinh - g * c.coth,
        (g * ip) * c.inv_sinh + f * c.coth,
        f * c.tanh * sqrt_n2,
    ]
    delta_u = _d(f) + f * c.coth + f * c.tanh * float(n - 2) + (g * ip) * c.inv_sinh
    grad_du = [_d(a), (a * ip) * c.inv_sinh, a * c.tanh * sqrt_n2]
    du = [a]

    if coupled3:
        w = components[2]
        sqrt_l = math.sqrt(block.lambda_prime)
        kappa = math.sqrt(block.lambda_prime * (n - 3) / (n - 2) + (n - 3))
        b = _d(w) + w * c.tanh - f * c.sech * sqrt_l
        cc = (w * ip) * c.inv_sinh - g * c.sech * sqrt_l
        du = [a, b, cc]
        delta_u = delta_u - w * c.sech * sqrt_l
        grad_u += [
            _d(w),
            (w * ip) * c.inv_sinh,
            f * c.sech * sqrt_l - w * c.tanh,
            g * c.sech * sqrt_l,
            (f * c.tanh - w * c.sech * (sqrt_l / (n - 2))) * sqrt_n2,
            w * c.sech * kappa,
        ]
        grad_du = [
            _d(a),
            _d(b),
            _d(cc),
            (a * ip) * c.inv_sinh,
            (b * ip) * c.inv_sinh - cc * c.coth,
            b * c.coth + (cc * ip) * c.inv_sinh,
            a * c.sech * sqrt_l + cc * c.tanh,
            (a * c.tanh + cc * c.sech * (sqrt_l / (n - 2))) * sqrt_n2,
            b * c.sech * (-sqrt_l / (n - 2)) * sqrt_n2,
            b * c.tanh * math.sqrt(n - 3),
            b * c.sech * kappa,
            cc * c.sech * kappa,
        ]
    return DerivedFields(
        u=list(components), du=du, delta_u=[-delta_u], grad_u=grad_u, grad_du=grad_du
    )


def _scalar_fields(components, block: ScalarBlock, p_beta: float, n: int, c: _Coefficients) -> DerivedFields:
    w = components[0]
    ip = complex(0, p_beta)
    mu = float(block.mu_prime)
    weight = math.sqrt(max(mu - (n - 3), 0.0)) if n >= 4 else 0.0
    b = _d(w) + w * c.tanh
    cc = (w * ip) * c.inv_sinh
    e = w * c.sech * weight
    grad_u = [_d(w), (w * ip) * c.inv_sinh, -(w * c.tanh), w * c.sech * math.sqrt(mu)]
    grad_du = [
        _d(b),
        _d(cc),
        _d(e),
        (b * ip) * c.inv_sinh - cc * c.coth,
        b * c.coth + (cc * ip) * c.inv_sinh,
        (e * ip) * c.inv_sinh,
        b * c.tanh * math.sqrt(n - 3),
        b * c.sech * math.sqrt(mu),
        cc * c.sech * math.sqrt(mu),
        cc * c.tanh,
        e * c.sech,
        e * c.tanh,
    ]
    zero = w * 0.0
    return DerivedFields(u=[w], du=[b, cc, e], delta_u=[zero], grad_u=grad_u, grad_du=grad_du)


def derived_field_series(branch: FrobeniusBranch, geom: ConeGeometry) -> DerivedFields:
    """Series of du, δu, ∇u and ∇du frame components along the branch.

    Every channel is a LogSeries r^k(S₀ + ln r·S₁); the cross-section
    eigenfunction factor is implicit.
    """
    if branch.order < 6:
        raise SeriesOrderError(f"Derived fields need branch order >= 6, got {branch.order}")
    block = branch.block
    n = geom.n
    p_beta = block.frequency(geom.beta)
    coefficients = _Coefficients(branch.order + 2)
    components = [branch.component(i) for i in range(branch.size)]
    if isinstance(block, ScalarBlock):
        return _scalar_fields(components, block, p_beta, n, coefficients)
    if isinstance(block, Coupled3Block) and (
        CouplingConvention(branch.operator.convention) is CouplingConvention.SYMMETRIC
    ):
        components[2] = -components[2]
    return _coupled_fields(components, block, p_beta, n, coefficients)


def _leading(channels: Sequence[LogSeries], threshold: float) -> Tuple[float, bool]:
    exponent, log = math.inf, False
    for channel in channels:
        e, has_log = channel.leading_term(threshold)
        if e < exponent - EXPONENT_TOL:
            exponent, log = e, has_log
        elif abs(e - exponent) <= EXPONENT_TOL:
            log = log or has_log
    return exponent, log


def _in_l2(exponent: float) -> bool:
    return exponent > -1 + EXPONENT_TOL


def _threshold(branch: FrobeniusBranch) -> float:
    scale = max(1.0, float(np.max(np.abs(branch.a[0]))), float(np.max(np.abs(branch.b[0]))))
    return settings.ZERO_COEFFICIENT_TOL * scale


def rule_exponents(branch: FrobeniusBranch, geom: ConeGeometry) -> Dict[str, Tuple[float, bool]]:
    """Closed-form exponents as (value, exact); inexact entries are lower bounds.

    du loses one power except at k = ±pβ−1 (the branch whose leading du
    coefficient cancels) and at k = 0 for the ω and scalar families.
    """
    k = branch.exponent
    if branch.logarithmic:
        return {"u": (k, True), "du": (-1.0, True), "grad_u": (-1.0, True), "grad_du": (-2.0, True)}

    p_beta = branch.block.frequency(geom.beta)
    near = lambda x, y: abs(x - y) <= EXPONENT_TOL * max(1.0, abs(y))  # noqa: E731
    exceptional = (
        (branch.family == MINUS_ONE and near(k, p_beta - 1))
        or (branch.family == PLUS_ONE and near(k, -p_beta - 1))
        or (branch.family in (OMEGA, SCALAR) and near(k, 0.0))
    )
    rules = {"u": (k, True)}
    rules["du"] = (k, False) if exceptional else (k - 1, True)
    rules["grad_u"] = (0.0, False) if near(k, 0.0) else (k - 1, True)
    du, du_exact = rules["du"]
    rules["grad_du"] = (du - 1, du_exact and not near(du, 0.0))
    return rules


def _agrees(series_value: float, rule: Tuple[float, bool]) -> bool:
    value, exact = rule
    if exact:
        return abs(series_value - value) <= EXPONENT_TOL * max(1.0, abs(value))
    return series_value >= value - 1e-9


def classify(branch: FrobeniusBranch, geom: ConeGeometry) -> L2Report:
    fields = derived_field_series(branch, geom)
    threshold = _threshold(branch)
    rules = rule_exponents(branch, geom)
    quantities = {}
    for name in QUANTITIES:
        exponent, log = _leading(getattr(fields, name), threshold)
        rule = rules.get(name)
        if rule is not None and not _agrees(exponent, rule):
            kind = "exactly" if rule[1] else "at least"
            raise ClassificationInconsistencyError(
                f"{branch.label}: {name} exponent {exponent} from the series, "
                f"rules give {kind} {rule[0]}"
            )
        quantities[name] = QuantityExponent(
            exponent=exponent,
            log=log,
            in_l2=_in_l2(exponent),
            rule_exponent=None if rule is None else rule[0],
            rule_exact=None if rule is None else rule[1],
        )
    return L2Report(block=branch.block, branch=branch, quantities=quantities)


def classify_block(
    block: AnyBlock, geom: ConeGeometry, N: Optional[int] = None, skip_unsupported: bool = False
) -> List[L2Report]:
    op = radial_operator(geom, block)
    return [
        classify(branch, geom)
        for branch in solution_basis(op, N, skip_unsupported=skip_unsupported)
    ]


def admissible_basis(
    block: AnyBlock, geom: ConeGeometry, N: Optional[int] = None, skip_unsupported: bool = False
) -> AdmissibleBasis:
    """Branches with u and du in L², out of the 2m of the block"""
    reports = classify_block(block, geom, N, skip_unsupported=skip_unsupported)
    admissible = [r for r in reports if r.admissible]
    logger.debug(f"{block.label}: admissible dimension {len(admissible)} of {len(reports)}")
    return AdmissibleBasis(
        block=block,
        branches=tuple(r.branch for r in admissible),
        reports=tuple(reports),
        total=len(reports),
    )


def domain_routes(branch: FrobeniusBranch, geom: ConeGeometry) -> Dict[str, bool]:
    """Membership through the (d, δ) route and through the ∇ route"""
    report = classify(branch, geom)
    return {"d_delta": report.d_delta_route, "nabla": report.nabla_route}


def failure_witnesses(
    geom: ConeGeometry, blocks: Sequence[AnyBlock], N: Optional[int] = None
) -> List[L2Report]:
    """Branches with u, du in L² but ∇u not in L² (possible only for β < 1)"""
    witnesses = []
    for block in blocks:
        witnesses += [
            r
            for r in classify_block(block, geom, N, skip_unsupported=True)
            if r.admissible and not r.quantities["grad_u"].in_l2
        ]
    if witnesses:
        logger.warning(f"{len(witnesses)} branches are admissible but have ∇u outside L² (beta={geom.beta})")
    return witnesses


def log_mode_witnesses(
    geom: ConeGeometry, blocks: Sequence[AnyBlock], N: Optional[int] = None
) -> List[L2Report]:
    """Branches with u in L² and du not in L², excluded by admissibility"""
    witnesses = []
    for block in blocks:
        witnesses += [
            r
            for r in classify_block(block, geom, N, skip_unsupported=True)
            if r.quantities["u"].in_l2 and not r.quantities["du"].in_l2
        ]
    return witnesses


def boundary_decay_probe(
    branch: FrobeniusBranch, geom: ConeGeometry, t_values: Sequence[float]
) -> DecayProbe:
    """Samples of ∫_{Σ_t}|u|² = volume_weight(t)|u(t)|² and their log-log slope"""
    t = np.asarray(t_values, dtype=float)
    if t.size == 0 or np.any(t <= 0) or np.any(t > settings.VALIDITY_RADIUS):
        raise ValueError(f"Probe radii must lie in (0, {settings.VALIDITY_RADIUS}]")
    values = np.array([np.linalg.norm(evaluate_branch(branch, x).values) ** 2 for x in t])
    integrals = volume_weight(t, geom.n) * values

    slope = None
    if t.size >= 2 and np.all(integrals > 0):
        slope = float(np.polyfit(np.log(t), np.log(integrals), 1)[0])
    log_t = np.abs(np.log(t))
    ratios = np.where(log_t > 0, integrals / (t * np.where(log_t > 0, log_t, 1.0)), 0.0)
    return DecayProbe(
        t_values=t, integrals=integrals, slope=slope, t_log_ratio=float(np.max(ratios))
    )
