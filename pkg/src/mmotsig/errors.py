"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent arguments (dimensions, names, ranges)."""


class SizeGuardExceeded(InputError):
    """A requested problem exceeds the desk-scale size guard."""

    def __init__(self, message, size):
        super().__init__(message)
        self.size = size


class NumericalError(RuntimeError):
    """A numerical routine failed (singular system, pivot limit, divergence)."""


class UnsupportedOperation(RuntimeError):
    """The requested operation is undefined for this cost kind."""


class ShortcutNotApplicable(RuntimeError):
    """Preconditions of a fast signature path do not hold for this input."""


class ConfigError(ValueError):
    """Configuration rejected; carries every violation found, with paths."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid configuration ({len(self.errors)} problem(s)): {lines}")
