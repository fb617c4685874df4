"""Reference server for the model-scorer wire protocol."""

from .registry import (
    ConfigError,
    ModelLoadError,
    ModelRegistry,
    ServerConfig,
    load_config,
)
from .server import ServerState, create_app
from .textmodels import HashEncoder, OverlapCrossScorer, TfidfLogisticClassifier

__all__ = [
    "ConfigError",
    "HashEncoder",
    "ModelLoadError",
    "ModelRegistry",
    "OverlapCrossScorer",
    "ServerConfig",
    "ServerState",
    "TfidfLogisticClassifier",
    "create_app",
    "load_config",
]
