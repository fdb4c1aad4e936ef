"""Exception types shared across the package."""


class MajlabError(Exception):
    """Base class for all package-specific errors."""


class ParseError(MajlabError):
    """Malformed input file or literal."""


class ValidationError(MajlabError):
    """A structural invariant does not hold (bad table, non-congruence, ...)."""


class GuardError(MajlabError):
    """A configured size or budget guard was exceeded."""

    def __init__(self, message: str, partial: int | None = None):
        super().__init__(message)
        self.partial = partial
