"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, PreconditionError -> 3.
"""


class GflError(Exception):
    """Base class for all package errors."""


class ConfigError(GflError):
    """Malformed input: bad config keys, unreadable files, invalid argv."""


class PreconditionError(GflError):
    """A mathematical precondition failed (delta range, admissibility window).

    Carries a structured diagnosis: which inequality failed and by how much.
    """

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures) if failures else []


class UnsupportedModelError(GflError):
    """Loss/noise pairing that the theory does not cover."""
