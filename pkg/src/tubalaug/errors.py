"""Exception classes shared across the package."""


class ShapeError(ValueError):
    """Operand dimensions do not satisfy an operation's contract."""


class FormatError(ValueError):
    """A file or serialized blob does not match its declared layout."""


class ConfigError(ValueError):
    """An experiment or layer configuration is inconsistent."""


class StateError(RuntimeError):
    """A cache or parameter set is stale or mismatched."""


class SpectrumError(ArithmeticError):
    """Inverse tube transform left non-negligible imaginary residue."""
