"""
Utilidades del laboratorio.
"""

from .errors import (
    AttackConfigError,
    CandidateSelectionError,
    GraphFormatError,
    GraphValidationError,
    NonFiniteError,
    StageError,
)

__all__ = [
    "AttackConfigError",
    "CandidateSelectionError",
    "GraphFormatError",
    "GraphValidationError",
    "NonFiniteError",
    "StageError",
]
