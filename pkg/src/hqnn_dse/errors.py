"""Exception hierarchy shared by all modules."""


class HqnnError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(HqnnError, ValueError):
    pass


class NumericError(HqnnError, ValueError):
    pass


class QubitIndexError(HqnnError, IndexError):
    pass


class ContractError(HqnnError, RuntimeError):
    pass


class EncodingError(HqnnError, ValueError):
    pass


class ValidationError(HqnnError, ValueError):
    pass


class ParameterError(HqnnError, ValueError):
    pass


class DataError(HqnnError, ValueError):
    """Problems with input data (ingestion, imputation, splitting)."""


class IngestionError(DataError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ImputationError(DataError):
    pass


class SplitError(DataError):
    pass


class StratificationError(SplitError):
    pass


class ComparabilityError(DataError):
    pass


class MetricError(HqnnError, ValueError):
    pass


class SpecError(HqnnError, ValueError):
    """Invalid grid specification."""


class QueryError(HqnnError, KeyError):
    pass


class IntegrityError(HqnnError):
    """A persisted results file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line
