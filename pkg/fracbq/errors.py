from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from fracbq.solver import PicardDiagnostics


class FracbqError(Exception):
    pass


class GridError(FracbqError, ValueError):
    pass


class FieldFormatError(FracbqError, ValueError):
    """Raised for malformed FBF1 payloads and mismatched field shapes."""


class IllPosedZeroModeError(FracbqError, ValueError):
    """A negative-order multiplier met a field with a nonzero mean."""


class IndexConstraintError(FracbqError, ValueError):
    pass


class ExponentMismatchError(FracbqError, ValueError):
    pass


class LatticeCompatibilityError(FracbqError, ValueError):
    pass


class DivergenceFreeError(FracbqError, ValueError):
    pass


class ConfigError(FracbqError, ValueError):
    pass


class PicardDivergenceError(FracbqError):
    def __init__(self, message: str, diagnostics: "Optional[PicardDiagnostics]" = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


class EtdInstabilityError(FracbqError):
    def __init__(self, message: str, step: int = 0) -> None:
        super().__init__(message)
        self.step = step


class OperatorError(FracbqError, ValueError):
    pass


class ProbeFamilyError(FracbqError, ValueError):
    pass
