"""
Pydantic schemas for run configuration and reports
"""

from .report_schemas import (
    AuditSection,
    BlockAuditEntry,
    BlockEntry,
    BranchReport,
    GeometryReport,
    IdentityEntry,
    QuantityEntry,
    RootEntry,
    RunReport,
    SolveEntry,
)
from .run_schemas import (
    BlockSelection,
    GeometryConfig,
    ModeBoundsConfig,
    OutputConfig,
    RunConfig,
    SolverSettings,
    VerifySettings,
)
