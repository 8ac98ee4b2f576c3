"""Session-scoped pipeline runs shared across test modules.

The k=4 pipeline takes roughly twenty seconds (exact rounding dominates),
so every module that needs its output reuses one run.
"""

from __future__ import annotations

import pytest

from flagcert.certify import PipelineResult, full_pipeline


@pytest.fixture(scope="session")
def pipeline4() -> PipelineResult:
    return full_pipeline(k=4)


@pytest.fixture(scope="session")
def pipeline3() -> PipelineResult:
    return full_pipeline(k=3)
