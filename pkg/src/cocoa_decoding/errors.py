"""Exception hierarchy."""
from __future__ import annotations


class CocoaError(Exception):
    """Base class for every error raised by this package."""


class DistributionError(CocoaError, ValueError):
    """Invalid input to a distribution constructor."""


class VocabMismatchError(CocoaError, ValueError):
    """Two distributions (or logit vectors) disagree on vocabulary size."""


class ProviderError(CocoaError):
    """A source of (prior, contextual) pairs failed."""


class TraceFormatError(ProviderError):
    """Malformed trace file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TransportError(ProviderError):
    """Network failure, timeout or non-2xx response from a logits server."""


class SchemaError(ProviderError):
    """A logits server answered with a body that does not match the protocol."""


class DecodeError(CocoaError):
    """A provider failed mid-decode; ``step`` is the 0-based step index."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")


class AnalysisError(CocoaError, ValueError):
    """Invalid input to an analysis routine (empty regime, zero rank variance...)."""


class SessionVocabError(ProviderError, VocabMismatchError):
    """A provider returned a vector whose length differs from the session's vocabulary."""
