"""HTTP service wrapping prediction and annotation."""

from .app import DEFAULT_LEASE_TTL_SECONDS, ServiceState, create_app
from .schemas import (
    ErrorBody,
    LabelRequest,
    LabelResponse,
    NextPairResponse,
    PredictRequest,
    PredictResponse,
    ProgressResponse,
    RankedResultBody,
)

__all__ = [
    "DEFAULT_LEASE_TTL_SECONDS",
    "ErrorBody",
    "LabelRequest",
    "LabelResponse",
    "NextPairResponse",
    "PredictRequest",
    "PredictResponse",
    "ProgressResponse",
    "RankedResultBody",
    "ServiceState",
    "create_app",
]
