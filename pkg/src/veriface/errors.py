"""Exception types and the process exit codes the CLI maps them to."""

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_TRAINING = 4


class VerifaceError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_UNEXPECTED


class ValidationError(VerifaceError):
    """Malformed or out-of-contract input (manifests, arguments, options)."""

    exit_code = EXIT_VALIDATION


class ConfigError(ValidationError):
    """Bad configuration file, key or value."""


class GeometryError(ValidationError):
    """Degenerate geometry, e.g. a zero-area landmark bounding box."""


class DataIOError(VerifaceError):
    """Missing or unreadable data file."""

    exit_code = EXIT_IO


class ModelIOError(VerifaceError):
    """Corrupt, truncated or incompatible model file."""

    exit_code = EXIT_IO


class InsufficientDataError(VerifaceError):
    """Not enough samples to fit a stage."""

    exit_code = EXIT_TRAINING


class FittingError(VerifaceError):
    """A training stage could not be fitted (e.g. single-class labels)."""

    exit_code = EXIT_TRAINING


class MetricError(VerifaceError):
    """A metric is undefined for the given inputs."""

    exit_code = EXIT_VALIDATION
