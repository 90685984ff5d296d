"""Exception hierarchy shared by every flmrsim module."""


class FLMRError(Exception):
    """Base class for all simulator errors."""


class ShapeError(FLMRError, ValueError):
    """Array shapes do not chain or match."""


class UsageError(FLMRError, ValueError):
    """An operation was called outside its preconditions."""


class ConfigurationError(FLMRError, ValueError):
    """An experiment or federation setting is invalid."""


class DataError(FLMRError, ValueError):
    """Base class for dataset ingestion problems."""


class SchemaError(DataError):
    """A CSV file is missing a required column."""

    def __init__(self, column: str, path: str | None = None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing required column '{column}'{where}")


class CsvParseError(DataError):
    """A CSV cell could not be parsed into its column type."""

    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column '{column}': cannot parse {value!r}")


class RecordValidationError(DataError):
    """A parsed CSV row violates the record bounds."""

    def __init__(self, row: int, detail: str):
        self.row = row
        super().__init__(f"row {row}: {detail}")


class OptimizerError(FLMRError, ArithmeticError):
    """The optimizer received a non-finite gradient."""

    def __init__(self, layer: int, message: str = "non-finite gradient"):
        self.layer = layer
        super().__init__(f"layer {layer}: {message}")


class AggregationError(FLMRError, ValueError):
    """Client updates cannot be averaged together."""

    def __init__(self, client_id: int, detail: str):
        self.client_id = client_id
        super().__init__(f"client {client_id}: {detail}")


class FederationError(FLMRError, RuntimeError):
    """A client failed during a federation round."""

    def __init__(self, client_id: int, round_index: int, cause: BaseException):
        self.client_id = client_id
        self.round_index = round_index
        self.cause = cause
        super().__init__(f"client {client_id} failed in round {round_index}: {cause}")
