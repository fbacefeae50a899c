"""Error taxonomy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, DivergenceError -> 4.
"""


class StcpError(Exception):
    """Base class for all package errors."""


class ConfigError(StcpError):
    """Invalid configuration: bad field values, unknown keys, incompatible shapes of a run."""


class DataError(StcpError):
    """Invalid data content: non-finite values, malformed files, out-of-contract inputs."""


class DivergenceError(StcpError):
    """A numerical process (solver step, training epoch) produced non-finite values."""


class FormatError(DataError):
    """A serialized stream does not conform to the expected binary/text layout."""


class ShapeError(DataError):
    """Array extents do not match the declared dimensions."""
