"""
Report schemas

Complex numbers are emitted as [re, im]; non-finite exponents as null.
"""

import math
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from cone_rigidity.models import AnyBlock, ConeGeometry


def finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def complex_pair(value: complex) -> List[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def complex_vector(values: np.ndarray) -> List[List[float]]:
    return [complex_pair(v) for v in np.asarray(values).reshape(-1)]


class GeometryReport(BaseModel):
    """Schema for the geometry section"""
    n: int
    alpha: float
    beta: float
    tube_radius: float
    chart: str

    @classmethod
    def from_geometry(cls, geom: ConeGeometry) -> "GeometryReport":
        return cls(
            n=geom.n,
            alpha=geom.alpha,
            beta=geom.beta,
            tube_radius=geom.tube_radius,
            chart=geom.chart,
        )


class BlockEntry(BaseModel):
    """Schema for one mode block"""
    label: str
    kind: str
    p: int
    lambda_prime: Optional[float] = None
    mu_prime: Optional[float] = None
    size: int
    frequency: float

    @classmethod
    def from_block(cls, block: AnyBlock, beta: float) -> "BlockEntry":
        return cls(
            label=block.label,
            kind=block.kind,
            p=block.p,
            lambda_prime=None if block.kind == "scalar" else block.lambda_prime,
            mu_prime=getattr(block, "mu_prime", None),
            size=block.size,
            frequency=block.frequency(beta),
        )


class RootEntry(BaseModel):
    """Schema for one indicial root"""
    block: str
    k: float
    multiplicity: int
    log_required: bool
    families: List[str]
    leading_vectors: List[List[List[float]]]


class QuantityEntry(BaseModel):
    exponent: Optional[float] = None
    log: bool
    in_l2: bool
    rule_exponent: Optional[float] = None
    rule_exact: Optional[bool] = None


class BranchReport(BaseModel):
    """Schema for the L² report of one Frobenius branch"""
    block: str
    exponent: float
    family: str
    logarithmic: bool
    admissible: bool
    nabla_route: bool
    d_delta_route: bool
    quantities: Dict[str, QuantityEntry]


class BlockAuditEntry(BaseModel):
    block: str
    admissible_dimension: int
    total_branches: int
    admissible_exponents: List[float]
    eigmin: Optional[float] = None
    kernel_empty: Optional[bool] = None


class AuditSection(BaseModel):
    """Schema for the audit section"""
    mode: str
    verdict: str
    kernel_free: bool
    blocks: List[BlockAuditEntry] = Field(default_factory=list)
    failure_witnesses: List[BranchReport] = Field(default_factory=list)
    log_mode_witnesses: List[BranchReport] = Field(default_factory=list)


class SolveEntry(BaseModel):
    """Schema for one per-block radial solve"""
    block: str
    solution_norm: float
    rhs_norm: float
    residual_norm: float
    linear_residual: float
    eigmin: Optional[float] = None
    max_abs: float
    max_error: Optional[float] = None
    inner_match_residual: Optional[float] = None


class IdentityEntry(BaseModel):
    """Schema for one identity convergence study"""
    identity: str
    n: int
    seed: int
    residuals: List[float]
    order: Optional[float] = None
    within_tolerance: bool


class RunReport(BaseModel):
    """Schema for a complete run report"""
    command: str
    config_echo: Dict[str, Any]
    geometry: GeometryReport
    blocks: List[BlockEntry] = Field(default_factory=list)
    roots: List[RootEntry] = Field(default_factory=list)
    reports: List[Dict[str, Any]] = Field(default_factory=list)
    audit: Optional[AuditSection] = None
    summary: Dict[str, Any] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)

    def table_rows(self) -> List[Dict[str, Any]]:
        """Flat rows for CSV and table output"""
        if self.reports:
            return self.reports
        if self.roots:
            return [row.model_dump() for row in self.roots]
        if self.audit is not None:
            return [row.model_dump() for row in self.audit.blocks]
        return [row.model_dump() for row in self.blocks]
