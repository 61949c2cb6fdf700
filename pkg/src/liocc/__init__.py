"""Coherence and entanglement under local incoherent operations and classical communication."""

__version__ = "0.1.0"

from .qcore import (  # noqa: E402
    DensityOperator,
    PureBipartiteState,
    VerificationError,
    ecobit,
    lambda_state,
    six_term_state,
)
from .measures import c_L, coherence_deficits, measure_report  # noqa: E402

__all__ = [
    "DensityOperator",
    "PureBipartiteState",
    "VerificationError",
    "c_L",
    "coherence_deficits",
    "ecobit",
    "lambda_state",
    "measure_report",
    "six_term_state",
]
