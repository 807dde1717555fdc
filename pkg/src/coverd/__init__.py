"""Few-pixel robustness verification driven by covering verification designs."""

from .design import cvd_stats, enumerate_candidates, estimate_distribution, schonheim_bound
from .engine import RunConfig, verify_ball
from .pg import InducedSelection, PgParams, cvd_stream, pg_covering

__version__ = "0.1.0"

__all__ = [
    "InducedSelection",
    "PgParams",
    "RunConfig",
    "cvd_stats",
    "cvd_stream",
    "enumerate_candidates",
    "estimate_distribution",
    "pg_covering",
    "schonheim_bound",
    "verify_ball",
]
