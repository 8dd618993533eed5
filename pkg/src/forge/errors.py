"""Exception hierarchy shared across the engine."""


class ForgeError(Exception):
    """Base class for all engine errors."""


class AuthMissing(ForgeError):
    """The profile references an API key environment variable that is unset."""


class TransientProviderError(ForgeError):
    """A retryable provider failure: transport error, HTTP 429, or HTTP 5xx."""


class PermanentProviderError(ForgeError):
    """A non-retryable provider failure (4xx other than 429)."""


class MalformedResponse(ForgeError):
    """The provider reply does not match its wire schema."""


class ExhaustedRetries(ForgeError):
    """All retry attempts failed; ``last_error`` carries the final cause."""

    def __init__(self, message: str, last_error: Exception | None = None):
        super().__init__(message)
        self.last_error = last_error


class MalformedJudgeOutput(ForgeError):
    """A judge/reviewer reply lacked the required fenced JSON score block."""


class MissingEnhancement(ForgeError):
    """A plan or feature lacks the enhanced description a step requires."""


class EmptyGeneration(ForgeError):
    """The model reply parsed to an empty tree and fallback is disabled."""


class InvalidFeatureName(ForgeError):
    """A feature name does not reduce to a valid module/path segment."""
