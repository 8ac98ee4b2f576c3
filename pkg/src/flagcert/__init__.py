"""Exact flag-algebra certificates for triangle densities in oriented graphs."""

from __future__ import annotations

from .certify import (
    Certificate,
    PipelineError,
    PipelineResult,
    VerificationReport,
    full_pipeline,
    verify,
)
from .exact_arith import (
    FieldOverflowError,
    QuadExt,
    Rational,
    is_pd,
    is_psd,
    kernel_basis,
    orthonormalize,
    quad_sign,
    solve_linear,
)

__all__ = [
    "Certificate",
    "FieldOverflowError",
    "PipelineError",
    "PipelineResult",
    "QuadExt",
    "Rational",
    "VerificationReport",
    "full_pipeline",
    "is_pd",
    "is_psd",
    "kernel_basis",
    "orthonormalize",
    "quad_sign",
    "solve_linear",
    "verify",
]

__version__ = "0.1.0"
