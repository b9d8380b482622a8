"""Exception hierarchy for wavicle-sim.

Every error carries the process exit code the CLI reports for it:
0 success, 1 runtime/IO failure, 2 usage/config error.
"""


class WavicleError(Exception):
    """Base class for all wavicle-sim errors."""

    exit_code = 1


class ConfigError(WavicleError):
    """Invalid configuration, grid or command-line value."""

    exit_code = 2

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DimensionMismatchError(ConfigError, ValueError):
    """Operands with incompatible Hilbert-space dimensions."""


class ValidationError(WavicleError, ValueError):
    """A constructed value violates its invariants (non-Hermitian, NaN, zero norm)."""


class ConvergenceError(WavicleError):
    """Jacobi sweeps exhausted before the off-diagonal norm vanished."""


class InsufficientDataError(WavicleError):
    """Not enough accumulated trials for a mean and standard error."""


class HarnessError(WavicleError):
    """Readings combined inconsistently by the simulation harness."""


class ScenarioMismatchError(HarnessError):
    """Accumulators from different scenarios cannot be merged."""


class OutputError(WavicleError):
    """Result file could not be written."""
