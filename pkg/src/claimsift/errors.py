"""Exception types shared across the package."""


class ClaimSiftError(Exception):
    """Base class for all claimsift errors."""


class ParseError(ClaimSiftError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class DuplicateIdError(ClaimSiftError):
    def __init__(self, kind, item_id):
        super().__init__(f"duplicate {kind} id {item_id!r}")
        self.item_id = item_id


class UnknownIdError(ClaimSiftError):
    def __init__(self, kind, item_id):
        super().__init__(f"unknown {kind} id {item_id!r}")
        self.item_id = item_id


class LabelTransitionError(ClaimSiftError):
    pass


class EmptyCorpusError(ClaimSiftError):
    pass


class DimensionMismatchError(ClaimSiftError):
    pass


class EncoderError(ClaimSiftError):
    """Encoding failure, annotated with the batch that triggered it."""

    def __init__(self, batch_index, cause):
        super().__init__(f"encoder failed on batch {batch_index}: {cause}")
        self.batch_index = batch_index
        self.cause = cause


class SingleClassError(ClaimSiftError):
    pass


class InsufficientClaimsError(ClaimSiftError):
    def __init__(self, tweet_id, available, needed):
        super().__init__(
            f"tweet {tweet_id!r} has only {available} unrelated claims, {needed} needed"
        )
        self.tweet_id = tweet_id
        self.available = available
        self.needed = needed


class FoldingError(ClaimSiftError):
    pass


class CrossValidationError(ClaimSiftError):
    """A fold's train or evaluate step failed; carries the fold index."""

    def __init__(self, fold_index, cause):
        super().__init__(f"fold {fold_index} failed: {cause}")
        self.fold_index = fold_index
        self.cause = cause


class ModelFormatError(ClaimSiftError):
    """Model file has a wrong magic header or an unsupported version."""


class PipelineStageError(ClaimSiftError):
    def __init__(self, stage, cause):
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class GatewayError(ClaimSiftError):
    """Base class for model-gateway client errors."""


class GatewayTransportError(GatewayError):
    pass


class GatewayProtocolError(GatewayError):
    """The server answered, but the payload violates the wire protocol."""


class GatewayServerError(GatewayError):
    pass


class DatasetTooLargeError(GatewayError):
    pass
