"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented bound or precondition.

    The message always names the offending parameter and the bound so that
    callers (and the CLI error records) can report something actionable.
    """
