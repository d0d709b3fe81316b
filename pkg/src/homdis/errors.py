"""Exception hierarchy shared across the toolkit."""


class HomdisError(Exception):
    """Base class for all toolkit errors."""


class ParseError(HomdisError):
    """A record in an input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(HomdisError):
    """A record parsed but violates the file schema or a type invariant."""


class InsufficientDataError(HomdisError):
    """A challenge set lacks the minimum data to be usable."""


class StratificationError(HomdisError):
    """Stratified fold planning is impossible under strict mode."""


class SamplingError(HomdisError):
    """A few-shot sample request cannot be satisfied."""


class CoverageError(HomdisError):
    """Requested sentences have no matching embedding records."""

    def __init__(self, message: str, missing_ids: list[str] | None = None):
        self.missing_ids = missing_ids or []
        super().__init__(message)


class ShapeError(HomdisError):
    """Vector or matrix dimensions do not match the model contract."""


class DivergenceError(HomdisError):
    """Training produced a non-finite loss."""


class ConfigurationError(HomdisError):
    """An experiment configuration is invalid or incomplete."""


class CorruptionError(HomdisError):
    """A binary file is structurally damaged."""


class VersionError(HomdisError):
    """A binary file carries an unsupported format version."""


class FitError(HomdisError):
    """A model cannot be fit from the given data."""


class TrainingError(HomdisError):
    """Classifier training preconditions are violated."""


class ProxyExhaustedError(HomdisError):
    """A mining proxy produced no usable corpus occurrences."""
