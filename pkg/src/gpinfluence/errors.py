"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input."""


class NumericalError(RuntimeError):
    """A linear-algebra step failed (e.g. factorization after max jitter)."""
