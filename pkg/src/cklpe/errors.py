"""Exception hierarchy.

Every error raised by the package derives from :class:`CKLPEError` and from
``ValueError`` so callers can catch either.
"""


class CKLPEError(ValueError):
    """Base class for all package errors."""


class InvalidArgumentError(CKLPEError):
    """An argument is outside its documented domain."""


class StrictPositivityError(CKLPEError):
    """A policy with a zero entry was passed where strict positivity is required."""


class DivergenceInfiniteError(CKLPEError):
    """KL(p || q) is infinite because q vanishes where p does not."""


class SupportViolationError(CKLPEError):
    """An observed action has zero probability under the behavior policy."""


class PreconditionError(CKLPEError):
    """A bound was evaluated outside the hypothesis under which it holds."""


class ConfigError(CKLPEError):
    """An experiment configuration is invalid.

    The offending field name is available as :attr:`field`.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
