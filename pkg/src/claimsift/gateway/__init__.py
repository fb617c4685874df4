"""Model-scorer protocol: client, port adapters, mock server, conformance."""

from .client import (
    GatewayClient,
    GatewayEndpoint,
    RemoteModelRef,
    RetryPolicy,
    TASK_CLASSIFY,
    TASK_EMBED,
    TASK_SCORE_PAIRS,
    gw_classify,
    gw_embed,
    gw_score_pairs,
    gw_train,
)
from .conformance import CheckResult, assert_conformance, run_conformance
from .mock import (
    MISBEHAVE_MIXED_DIMS,
    MISBEHAVE_PROBS_OUT_OF_RANGE,
    MISBEHAVE_SCORE_COUNT,
    MOCK_CLASSIFIER_ID,
    MOCK_SCORER_ID,
    MockGatewayState,
    build_mock_app,
)
from .ports import (
    DETECTOR_FINETUNE,
    PAIR_SCORER_FINETUNE,
    GatewayClassifierPort,
    GatewayDetector,
    GatewayEncoder,
    GatewayRanker,
)

__all__ = [
    "CheckResult",
    "DETECTOR_FINETUNE",
    "MISBEHAVE_MIXED_DIMS",
    "MISBEHAVE_PROBS_OUT_OF_RANGE",
    "MISBEHAVE_SCORE_COUNT",
    "MOCK_CLASSIFIER_ID",
    "MOCK_SCORER_ID",
    "GatewayClassifierPort",
    "GatewayClient",
    "GatewayDetector",
    "GatewayEncoder",
    "GatewayEndpoint",
    "GatewayRanker",
    "MockGatewayState",
    "PAIR_SCORER_FINETUNE",
    "RemoteModelRef",
    "RetryPolicy",
    "TASK_CLASSIFY",
    "TASK_EMBED",
    "TASK_SCORE_PAIRS",
    "assert_conformance",
    "build_mock_app",
    "gw_classify",
    "gw_embed",
    "gw_score_pairs",
    "gw_train",
    "run_conformance",
]
