"""Exception types shared across the toolkit.

Every exception carries a stable ``code`` string so the CLI and reports can
emit machine-readable error identifiers without parsing messages.
"""

from __future__ import annotations


class ArgsumError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


class SchemaError(ArgsumError):
    """A file does not conform to its documented schema."""

    code = "schema_error"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCorpusError(ArgsumError):
    code = "empty_corpus"


class CorpusTooSmallError(ArgsumError):
    code = "corpus_too_small"


class MissingKnowledgeError(ArgsumError):
    """A record lacks the annotation field required by the chosen variant."""

    code = "missing_knowledge"


class ControlTokenInValueError(ArgsumError):
    """A field value embeds one of the reserved control tokens."""

    code = "control_token_in_value"


class MalformedSequenceError(ArgsumError):
    """An encoded sequence has missing, duplicated, or misordered tokens."""

    code = "malformed_sequence"


class VocabularyNotFittedError(ArgsumError):
    code = "vocabulary_not_fitted"


class IndexNotBuiltError(ArgsumError):
    code = "index_not_built"


class DimensionMismatchError(ArgsumError):
    code = "dimension_mismatch"


class ZeroVectorError(ArgsumError):
    code = "zero_vector"


class EmptyConclusionError(ArgsumError):
    code = "empty_conclusion"


class EmptyTokenListError(ArgsumError):
    code = "empty_token_list"


class LengthMismatchError(ArgsumError):
    code = "length_mismatch"


class ProviderUnreachableError(ArgsumError):
    """The remote inference service cannot be reached or rejects the call."""

    code = "provider_unreachable"


class EmbeddingFailureError(ArgsumError):
    """An embedding provider failed while vectorizing sentences."""

    code = "embedding_failure"
