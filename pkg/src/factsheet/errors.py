"""Exception hierarchy shared across the pipeline."""


class FactsheetError(Exception):
    """Base class for all errors raised by this package."""


class CsvError(FactsheetError):
    """Malformed or empty CSV input; carries row/column position when known."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class ClassifyError(FactsheetError):
    pass


class ProfileError(FactsheetError):
    pass


class AnonymizeError(FactsheetError):
    pass


class RepresentationError(FactsheetError):
    """Budget too small for even the schema + statistics block."""

    def __init__(self, message, min_budget=None):
        super().__init__(message)
        self.min_budget = min_budget


class TransportError(FactsheetError):
    pass


class FixtureMissingError(TransportError):
    def __init__(self, digest):
        super().__init__(f"fixture missing for request digest {digest}")
        self.digest = digest


class SchemaValidationError(FactsheetError):
    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = list(fields)


class WorkerError(FactsheetError):
    """Terminal worker failure; carries the raw model text for diagnostics."""

    def __init__(self, message, raw_text=None):
        super().__init__(message)
        self.raw_text = raw_text


class ExtractionError(FactsheetError):
    """All SQL generation attempts failed for one fact."""

    def __init__(self, message, last_sql=None, last_error=None):
        super().__init__(message)
        self.last_sql = last_sql
        self.last_error = last_error


class ChartError(FactsheetError):
    pass


class LayoutError(FactsheetError):
    pass


class BlockStoreError(FactsheetError):
    pass


class SheetNotFoundError(FactsheetError):
    pass


class RevisionConflictError(FactsheetError):
    def __init__(self, expected, actual):
        super().__init__(
            f"revision conflict: edit based on revision {expected}, sheet is at {actual}"
        )
        self.expected = expected
        self.actual = actual


class EditValidationError(FactsheetError):
    pass


class UnsupportedRequestError(FactsheetError):
    """Request asks for a capability outside the pipeline (e.g. forecasting)."""


class GenerationError(FactsheetError):
    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)
