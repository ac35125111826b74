"""
Run configuration schemas
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cone_rigidity.config import settings
from cone_rigidity.models import AnyBlock, ConeGeometry, Coupled2Block, Coupled3Block, ScalarBlock

IDENTITY_NAMES = ("W1", "W2", "WS", "BIANCHI_NORM", "EPRIME_TRIVIAL", "TRACE_ID", "DNABLA_SQUARED")


class GeometryConfig(BaseModel):
    """Schema for the model tube: exactly one of alpha and beta"""
    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=3, ge=3)
    alpha: Optional[float] = Field(default=None, gt=0)
    beta: Optional[float] = Field(default=None, gt=0)
    tube_radius: float = Field(default=1.0, gt=0)
    length: float = Field(default=2 * math.pi, gt=0)
    eigendata: Optional[str] = None

    @model_validator(mode="after")
    def _check_angle_and_files(self):
        if (self.alpha is None) == (self.beta is None):
            raise ValueError("Exactly one of alpha and beta must be given")
        if self.eigendata is not None and not Path(self.eigendata).is_file():
            raise ValueError(f"Eigendata file not found: {self.eigendata}")
        return self

    def to_geometry(self) -> ConeGeometry:
        if self.n == 3:
            cross_section = {"kind": "circle", "length": self.length}
        else:
            cross_section = {"kind": "tabulated", "source": self.eigendata}
        return ConeGeometry.from_angle(
            self.n,
            alpha=self.alpha,
            beta=self.beta,
            tube_radius=self.tube_radius,
            cross_section=cross_section,
        )


class ModeBoundsConfig(BaseModel):
    """Schema for circle-mode enumeration bounds"""
    model_config = ConfigDict(extra="forbid")

    p_max: int = Field(default=2, ge=0)
    q_max: int = Field(default=2, ge=0)


class BlockSelection(BaseModel):
    """Schema for a single explicitly chosen block"""
    model_config = ConfigDict(extra="forbid")

    kind: Optional[Literal["coupled3", "coupled2", "scalar"]] = None
    p: int = 0
    lambda_prime: float = Field(default=1.0, gt=0)
    mu_prime: float = Field(default=0.0, ge=0)

    def to_block(self) -> Optional[AnyBlock]:
        if self.kind == "coupled3":
            return Coupled3Block(lambda_prime=self.lambda_prime, p=self.p)
        if self.kind == "coupled2":
            return Coupled2Block(p=self.p)
        if self.kind == "scalar":
            return ScalarBlock(mu_prime=self.mu_prime, p_prime=self.p)
        return None


class SolverSettings(BaseModel):
    """Schema for radial solver settings"""
    model_config = ConfigDict(extra="forbid")

    mesh_points: int = Field(default_factory=lambda: settings.MESH_POINTS, ge=16)
    grading: float = Field(default_factory=lambda: settings.MESH_GRADING, ge=1)
    order: int = Field(default_factory=lambda: settings.FROBENIUS_ORDER, ge=4)
    rhs: Literal["bump", "manufactured", "zero"] = "bump"


class VerifySettings(BaseModel):
    """Schema for the finite-difference identity suite"""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default_factory=lambda: settings.VERIFY_SEED)
    samples: int = Field(default=5, ge=1)
    levels: int = Field(default=2, ge=2)
    r_bounds: Tuple[float, float] = (0.2, 1.0)
    identities: Optional[List[str]] = None

    @field_validator("identities")
    @classmethod
    def validate_identities(cls, v):
        if v is None:
            return v
        unknown = [name for name in v if name not in IDENTITY_NAMES]
        if unknown:
            raise ValueError(f"Unknown identities {unknown}; allowed: {list(IDENTITY_NAMES)}")
        return v

    @field_validator("r_bounds")
    @classmethod
    def validate_bounds(cls, v):
        if not v[0] < v[1]:
            raise ValueError("r_bounds must be increasing")
        return v


class OutputConfig(BaseModel):
    """Schema for report output"""
    model_config = ConfigDict(extra="forbid")

    format: Literal["json", "csv", "table"] = "json"
    path: Optional[str] = None
    timings: bool = False


class RunConfig(BaseModel):
    """Schema for one CLI run"""
    model_config = ConfigDict(extra="forbid")

    geometry: GeometryConfig
    modes: ModeBoundsConfig = Field(default_factory=ModeBoundsConfig)
    block: BlockSelection = Field(default_factory=BlockSelection)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    verify: VerifySettings = Field(default_factory=VerifySettings)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @classmethod
    def load(
        cls, path: Optional[str] = None, overrides: Optional[Dict[str, Dict[str, Any]]] = None
    ) -> "RunConfig":
        """Read a JSON config (if any) and apply explicit overrides section by section"""
        data: Dict[str, Any] = {}
        if path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            if not isinstance(data, dict):
                raise ValueError(f"Config file {path} must hold a JSON object")
        overrides = overrides or {}
        angle_given = any(
            overrides.get("geometry", {}).get(key) is not None for key in ("alpha", "beta")
        )
        for section, values in overrides.items():
            merged = dict(data.get(section) or {})
            if section == "geometry" and angle_given:
                # an angle on the command line replaces the file's angle
                merged.pop("alpha", None)
                merged.pop("beta", None)
            merged.update({k: v for k, v in values.items() if v is not None})
            data[section] = merged
        data.setdefault("geometry", {})
        return cls.model_validate(data)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude={"output": {"path"}})
