"""
Frequency blocks of the 1-form decomposition along a cross-section eigenbasis
"""

from typing import Annotated, ClassVar, Literal, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

_KIND_RANK = {"coupled3": 0, "coupled2": 1, "scalar": 2}


class Coupled3Block(BaseModel):
    """(f, g, ω) block for an eigenfunction with λ′ > 0"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["coupled3"] = "coupled3"
    lambda_prime: float = Field(gt=0)
    p: int

    size: ClassVar[int] = 3

    def frequency(self, beta: float) -> float:
        return self.p * beta

    @property
    def key(self) -> Tuple[int, int, float]:
        return (_KIND_RANK[self.kind], self.p, self.lambda_prime)

    @property
    def label(self) -> str:
        return f"coupled3(p={self.p},lambda'={self.lambda_prime!r})"


class Coupled2Block(BaseModel):
    """(f, g) block for an eigenfunction in the equality case λ′ = 0"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["coupled2"] = "coupled2"
    p: int

    size: ClassVar[int] = 2

    @property
    def lambda_prime(self) -> float:
        return 0.0

    def frequency(self, beta: float) -> float:
        return self.p * beta

    @property
    def key(self) -> Tuple[int, int, float]:
        return (_KIND_RANK[self.kind], self.p, 0.0)

    @property
    def label(self) -> str:
        return f"coupled2(p={self.p})"


class ScalarBlock(BaseModel):
    """Coclosed cross-section 1-form block ϖ·φ′"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["scalar"] = "scalar"
    mu_prime: float = Field(ge=0)
    p_prime: int

    size: ClassVar[int] = 1

    @property
    def p(self) -> int:
        return self.p_prime

    def frequency(self, beta: float) -> float:
        return self.p_prime * beta

    @property
    def key(self) -> Tuple[int, int, float]:
        return (_KIND_RANK[self.kind], self.p_prime, self.mu_prime)

    @property
    def label(self) -> str:
        return f"scalar(p'={self.p_prime},mu'={self.mu_prime!r})"


ModeBlock = Annotated[
    Union[Coupled3Block, Coupled2Block, ScalarBlock], Field(discriminator="kind")
]
AnyBlock = Union[Coupled3Block, Coupled2Block, ScalarBlock]
