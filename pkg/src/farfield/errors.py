"""Exception taxonomy shared by all pipeline stages.

Everything raised on bad inputs or bad data derives from ``FrontendError``
so the CLI can map any stage failure to a diagnostic and exit code 1.
"""


class FrontendError(Exception):
    """Base class for all toolkit errors."""


class FormatError(FrontendError):
    """Malformed or truncated file content."""


class UnsupportedEncodingError(FormatError):
    """File is well formed but uses an encoding outside the supported profile."""


class SchemaVersionError(FormatError):
    """Manifest declares a schema version this build does not understand."""


class ManifestParseError(FormatError):
    """Bad manifest record; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(FrontendError, ValueError):
    """Invalid configuration value (e.g. a window/hop pair violating COLA)."""


class ShapeError(FrontendError, ValueError):
    """Array shapes or channel counts do not match."""


class SampleRateError(FrontendError, ValueError):
    """Inputs have different sample rates; resampling is out of scope."""


class TooShortError(FrontendError, ValueError):
    """Signal is too short for the requested operation."""


class DegenerateInputError(FrontendError, ValueError):
    """Input carries no usable information (e.g. zero-energy signal)."""


class InvalidAudioError(FrontendError, ValueError):
    """Audio samples violate the clip invariants (e.g. NaN values)."""


class NumericError(FrontendError, ArithmeticError):
    """A numerical solve failed or produced non-finite values."""


class SingularMatrixError(NumericError):
    """Normal equations are singular; retry with regularization > 0."""


class PoolError(FrontendError, ValueError):
    """Clip pool cannot support the requested mixture sampling."""
