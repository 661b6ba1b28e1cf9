"""Instrumental-variable G-estimation of EIN, NNE and NNT.

Double-logit and double-probit structural mean models, sandwich confidence
intervals, a data-generating process for simulation studies and a CLI.
"""
__version__ = "0.1.0"

from .domain import (  # noqa: E402
    EstimateReport,
    IVNNTError,
    ModelSpec,
    NoSolution,
    ObservationRecord,
    ObservationSet,
    SeparationError,
    ThetaVector,
    ValidationError,
    validate,
)
from .linkmath import LinkKind, g_transform  # noqa: E402
from .estimator import g_estimate, instrument_strength, naive_estimates  # noqa: E402
from .variance import sandwich  # noqa: E402
from .pipeline import estimate  # noqa: E402
from .dgp import DgpConfig, DgpTruth, generate, solve_beta  # noqa: E402
from .harness import StudyConfig, StudySummary, run_study  # noqa: E402

__all__ = [
    "DgpConfig",
    "DgpTruth",
    "EstimateReport",
    "IVNNTError",
    "LinkKind",
    "ModelSpec",
    "NoSolution",
    "ObservationRecord",
    "ObservationSet",
    "SeparationError",
    "StudyConfig",
    "StudySummary",
    "ThetaVector",
    "ValidationError",
    "estimate",
    "g_estimate",
    "g_transform",
    "generate",
    "instrument_strength",
    "naive_estimates",
    "run_study",
    "sandwich",
    "solve_beta",
    "validate",
]
