"""Error types shared by every stage, each carrying the CLI exit status it maps to."""


class AnomalyError(Exception):
    """Base class for all expected failures."""

    exit_code: int = 1


class DomainError(AnomalyError):
    """Argument outside the mathematical domain of an operation (T <= 0, K = 1, ...)."""


class ContractError(AnomalyError):
    """Caller violated a shape or usage precondition."""


class ConfigError(AnomalyError):
    """Run configuration could not be parsed or validated."""


class GenerationError(AnomalyError):
    """Synthetic data could not be produced under the requested constraints."""


class DataError(AnomalyError):
    """Dataset content is unsuitable for the requested stage."""


class CalibrationError(AnomalyError):
    """Temperature / threshold calibration could not run."""


class ParseError(AnomalyError):
    """Malformed record in a dataset, checkpoint or results file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResolutionError(AnomalyError):
    """A referenced file does not exist."""

    exit_code = 3

    def __init__(self, path: str, what: str = "file"):
        self.path = str(path)
        super().__init__(f"{what} not found: {self.path}")


class NumericalError(AnomalyError):
    """An operation produced NaN/Inf or an optimisation failed to converge."""

    exit_code = 4

    def __init__(self, op: str, detail: str = "non-finite value"):
        self.op = op
        super().__init__(f"{op}: {detail}")
