"""Exception hierarchy shared across the package.

ValidationError subclasses map to CLI exit code 1, FormatError and plain
OSError to exit code 2.
"""


class SimtrackError(Exception):
    pass


class ValidationError(SimtrackError):
    """Bad inputs, bad configuration, broken invariants."""


class ConfigError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    """Vectors from incompatible embedding heads."""


class SequencingError(ValidationError):
    """Frames fed to the tracker out of order."""


class InputIntegrityError(ValidationError):
    """Score matrix references ids the matcher was never told about."""


class FormatError(SimtrackError):
    """Unparseable data file (treated as an I/O-class failure)."""


class DegenerateTrainingWarning(UserWarning):
    """Training set contains only one pair label."""
