"""
Configuration management for the cone rigidity toolkit
"""

from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with validation"""

    model_config = SettingsConfigDict(
        env_prefix="CONE_RIGIDITY_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Environment
    ENVIRONMENT: str = "development"
    DEBUG: bool = False

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # Series / Frobenius
    SERIES_ORDER: int = 20
    FROBENIUS_ORDER: int = 16
    VALIDITY_RADIUS: float = 0.5
    ZERO_COEFFICIENT_TOL: float = 1e-10
    RESONANCE_TOL: float = 1e-9
    COUPLING_CONVENTION: str = "symmetric"

    # Radial solver
    MESH_POINTS: int = 512
    MESH_GRADING: float = 2.0
    INNER_MATCH_NODES: int = 5
    LINEAR_RESIDUAL_TOL: float = 1e-10
    EIGMIN_TOL: float = 1e-2

    # Finite-difference verification
    VERIFY_MIN_RADIUS: float = 0.05
    VERIFY_SEED: int = 20240611

    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v):
        allowed = ["development", "testing", "production"]
        if v not in allowed:
            raise ValueError(f"Environment must be one of: {allowed}")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v = v.upper()
        if v not in allowed:
            raise ValueError(f"Log level must be one of: {allowed}")
        return v

    @field_validator("COUPLING_CONVENTION")
    @classmethod
    def validate_convention(cls, v):
        allowed = ["symmetric", "printed"]
        if v not in allowed:
            raise ValueError(f"Coupling convention must be one of: {allowed}")
        return v

    @field_validator("SERIES_ORDER", "FROBENIUS_ORDER")
    @classmethod
    def validate_order(cls, v):
        if v < 4:
            raise ValueError("Series orders below 4 cannot resolve leading terms")
        return v

    @field_validator("MESH_POINTS")
    @classmethod
    def validate_mesh_points(cls, v):
        if v < 16:
            raise ValueError("Radial mesh needs at least 16 points")
        return v


# Global settings instance
settings = Settings()


class SeriesConfig:
    """Series and Frobenius parameters"""

    @staticmethod
    def get_series_params():
        return {
            "order": settings.SERIES_ORDER,
            "frobenius_order": settings.FROBENIUS_ORDER,
            "validity_radius": settings.VALIDITY_RADIUS,
            "zero_tol": settings.ZERO_COEFFICIENT_TOL,
            "resonance_tol": settings.RESONANCE_TOL,
        }


class SolverConfig:
    """Radial boundary-value solver parameters"""

    @staticmethod
    def get_mesh_params():
        return {
            "points": settings.MESH_POINTS,
            "grading": settings.MESH_GRADING,
        }

    @staticmethod
    def get_tolerances():
        return {
            "linear_residual": settings.LINEAR_RESIDUAL_TOL,
            "eigmin": settings.EIGMIN_TOL,
            "inner_match_nodes": settings.INNER_MATCH_NODES,
        }


class VerifyConfig:
    """Finite-difference verification parameters"""

    @staticmethod
    def get_verify_params():
        return {
            "min_radius": settings.VERIFY_MIN_RADIUS,
            "seed": settings.VERIFY_SEED,
        }
