"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: parse errors exit 2, numeric errors 3,
verification failures 4, exhausted delta selection 5.
"""


class HopfDesignError(Exception):
    """Base class for all package errors."""


class DomainError(HopfDesignError):
    """Input violates a documented precondition (off-sphere point, bad degree, ...)."""


class NumericError(HopfDesignError):
    """A numerical procedure failed to converge or became degenerate."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateCurveError(NumericError):
    """Curve has vanishing velocity on a set of positive measure."""


class ConstructionError(HopfDesignError):
    """Assembled curve violates a structural guarantee (e.g. closure)."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SelectionExhaustedError(HopfDesignError):
    """No offset candidate produced a self-intersection-free curve."""

    def __init__(self, message: str, colliding_pairs: list | None = None):
        super().__init__(message)
        self.colliding_pairs = colliding_pairs or []


class ParseError(HopfDesignError):
    """Curve description file violates the schema."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        detail = message
        if field is not None:
            detail = f"{message} (field: {field})"
        if line is not None:
            detail = f"{detail} (line {line})"
        super().__init__(detail)
        self.field = field
        self.line = line
