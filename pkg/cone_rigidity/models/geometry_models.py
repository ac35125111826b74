"""
Model cone geometry: dimension, cone angle, tube radius and cross-section
"""

import math
from typing import Annotated, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cone_rigidity.utils.errors import GeometryDomainError


class CircleCrossSection(BaseModel):
    """Flat circle cross-section of length ℓ (only for n = 3)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["circle"] = "circle"
    length: float = Field(default=2 * math.pi, gt=0)


class TabulatedCrossSection(BaseModel):
    """Cross-section known only through external eigendata (n >= 4)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["tabulated"] = "tabulated"
    source: Optional[str] = None


CrossSection = Annotated[
    Union[CircleCrossSection, TabulatedCrossSection], Field(discriminator="kind")
]


class FramePoint(BaseModel):
    """Point of the tube in cylindrical chart coordinates"""
    model_config = ConfigDict(frozen=True)

    r: float = Field(gt=0)
    theta: float = 0.0
    coords: Tuple[float, ...] = ()


class ConeGeometry(BaseModel):
    """Exact hyperbolic model tube dr² + sinh²r dθ² + cosh²r g_Σ around one singular stratum.

    β is stored; α = 2π/β is derived so the two are always consistent.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(ge=3)
    beta: float = Field(gt=0)
    tube_radius: float = Field(default=1.0, gt=0)
    cross_section: Optional[CrossSection] = None

    @model_validator(mode="before")
    @classmethod
    def _default_cross_section(cls, data):
        if isinstance(data, dict) and data.get("cross_section") is None:
            data = dict(data)
            n = data.get("n", 3)
            data["cross_section"] = {"kind": "circle"} if n == 3 else {"kind": "tabulated"}
        return data

    @model_validator(mode="after")
    def _check_cross_section(self):
        if isinstance(self.cross_section, CircleCrossSection) and self.n != 3:
            raise ValueError("Circle cross-section is only available for n = 3")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        return self

    @classmethod
    def from_angle(
        cls,
        n: int,
        alpha: Optional[float] = None,
        beta: Optional[float] = None,
        **kwargs,
    ) -> "ConeGeometry":
        """Build a geometry from exactly one of the cone angle α or the frequency β"""
        if (alpha is None) == (beta is None):
            raise ValueError("Exactly one of alpha and beta must be given")
        if alpha is not None:
            if alpha <= 0:
                raise ValueError("Cone angle alpha must be positive")
            beta = 2 * math.pi / alpha
        return cls(n=n, beta=beta, **kwargs)

    @property
    def alpha(self) -> float:
        return 2 * math.pi / self.beta

    @property
    def cross_section_dim(self) -> int:
        return self.n - 2

    @property
    def chart(self) -> str:
        """Cross-section chart used for frame data and verification grids"""
        if self.n == 3:
            return "circle"
        if self.n == 4:
            return "half_plane"
        return "horospherical"

    @property
    def circle_length(self) -> float:
        if not isinstance(self.cross_section, CircleCrossSection):
            raise ValueError("Geometry has no circle cross-section")
        return self.cross_section.length

    def point(self, r: float, theta: float = 0.0, *coords: float) -> FramePoint:
        if not 0 < r <= self.tube_radius:
            raise GeometryDomainError(
                f"Radial coordinate {r} outside the tube (0, {self.tube_radius}]"
            )
        if len(coords) not in (0, self.n - 2):
            raise ValueError(f"Expected {self.n - 2} cross-section coordinates, got {len(coords)}")
        coords = tuple(float(c) for c in coords) or (0.0,) * (self.n - 2)
        return FramePoint(r=r, theta=theta % self.alpha, coords=coords)
