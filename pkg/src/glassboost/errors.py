"""Exception types shared across the package.

The CLI maps these onto exit codes, so new failure modes should reuse one of
the classes below instead of raising bare exceptions.
"""


class ValidationError(ValueError):
    """Input data or configuration failed a documented precondition."""


class StateError(RuntimeError):
    """An operation ran before a required fitting step (for example using the
    cool-contrast normalizer before its maximum has been fit)."""
