"""Exception types shared across the package.

The CLI maps these onto exit codes: config problems exit 3, everything
else data-related exits 2.
"""


class PitchTrackError(Exception):
    """Base class for all package errors."""


class ConfigError(PitchTrackError):
    """Invalid configuration value or config file."""


class GeometryError(PitchTrackError):
    """Degenerate or invalid box geometry."""


class ParseError(PitchTrackError):
    """A stream record could not be decoded.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, line: int, message: str, source: str = "input"):
        self.line = line
        self.source = source
        super().__init__(f"{source}: line {line}: {message}")


class ValidationError(PitchTrackError):
    """A decoded record violates the schema; names the offending field."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}field '{field}': {message}")


class LinkError(PitchTrackError):
    """An embedding references a detection that does not exist."""


class SequencingError(PitchTrackError):
    """Frames were fed to the tracker out of contract."""


class InsufficientDataError(PitchTrackError):
    """Not enough points for the requested operation."""


class NumericError(PitchTrackError):
    """A numerical routine produced non-finite intermediates."""


class AdapterError(PitchTrackError):
    """An external detector adapter failed to launch or load."""
