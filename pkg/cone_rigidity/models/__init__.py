"""
Domain models for the model cone tube and its mode blocks
"""

from .geometry_models import (
    CircleCrossSection,
    ConeGeometry,
    FramePoint,
    TabulatedCrossSection,
)
from .mode_models import (
    AnyBlock,
    Coupled2Block,
    Coupled3Block,
    ModeBlock,
    ScalarBlock,
)
