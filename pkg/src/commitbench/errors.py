"""Exception hierarchy.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
SolverError -> 4.
"""


class CommitBenchError(Exception):
    exit_code = 1


class ConfigError(CommitBenchError, ValueError):
    exit_code = 2


class DataError(CommitBenchError, ValueError):
    exit_code = 3


class CoverageError(DataError):
    """Requested hours fall outside the data that is available."""


class FormatError(DataError):
    pass


class IncompatibleWindowError(DataError):
    pass


class WrongKindError(DataError):
    """A point window was given where a scenario window is required, or vice versa."""


class NoOverlapError(DataError):
    pass


class SizeMismatchError(DataError):
    pass


class UndefinedMetricError(DataError):
    pass


class NumericDomainError(DataError):
    pass


class PeriodError(DataError):
    pass


class SpecError(DataError):
    """Invalid battery or environment specification."""


class CommitmentError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class SolverError(CommitBenchError, RuntimeError):
    exit_code = 4
