"""Exception hierarchy shared by every module.

Two families matter to callers: ValidationError (bad input, bad data, broken
contracts) and ProviderError (anything that went wrong talking to a model
endpoint). The service layer maps the first family to HTTP 422 and the second
to 502; the CLI maps those onto exit codes 1 and 2.
"""


class ClaimTrustError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClaimTrustError):
    """Input data or call contract violated."""


class SchemaError(ValidationError):
    """An input file is missing a required column or field."""


class ParseError(ValidationError):
    """A persisted artifact could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class DataError(ValidationError):
    """A record references something that does not exist."""


class CapacityError(ValidationError):
    """A fixed-size resource (e.g. the 4-digit id space) would overflow."""


class ProviderError(ClaimTrustError):
    """A model endpoint failed after all retries."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        if status is not None:
            message = f"{message} (HTTP {status})"
        if body:
            message = f"{message}: {body[:200]}"
        super().__init__(message)
        self.status = status
        self.body = body


class ProviderTimeout(ProviderError):
    """A model endpoint did not answer within the configured timeout."""


class ProtocolError(ProviderError):
    """A model endpoint answered with an envelope we cannot interpret."""
