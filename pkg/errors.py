"""
Error hierarchy shared by every module.

Each error carries the process exit code that cli.main reports for it:
2 for configuration problems, 3 for bad input data, 4 for numeric degeneracy.
"""


class AnomalyError(Exception):
    """Base class for all errors raised by this project."""

    exit_code = 1


# --- configuration (exit 2) ------------------------------------------------


class ConfigError(AnomalyError, ValueError):
    exit_code = 2


class TimeIndexError(ConfigError, IndexError):
    """A time step that does not exist, or a delta statistic at a step without t-1."""


class UnsupportedStatisticError(ConfigError):
    pass


class InvalidSpecError(ConfigError):
    """A generator spec that cannot produce an edge distribution."""


# --- input data (exit 3) ---------------------------------------------------


class DataError(AnomalyError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class RejectedRecordError(ParseError):
    pass


class EmptySnapshotError(DataError):
    pass


class TooFewEdgesError(EmptySnapshotError):
    """Snapshot has edges, but fewer than an estimator needs."""


class IncompatibleSnapshotError(DataError):
    pass


# --- numeric degeneracy (exit 4) -------------------------------------------


class NumericError(AnomalyError, ArithmeticError):
    exit_code = 4


class DegenerateNullError(NumericError):
    def __init__(self, statistic: str, message: str):
        super().__init__(f"{statistic}: {message}")
        self.statistic = statistic


class NothingToAttributeError(NumericError):
    pass
