"""Exception hierarchy. CLI exit statuses are keyed off these classes."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class GeometryError(DomainError):
    """Membrane layout is degenerate (touching a mirror, coincident, unordered)."""


class ConfigError(ValueError):
    """Invalid run configuration."""


class NumericalError(RuntimeError):
    """Root finding or differentiation failed."""


class SingularPointError(NumericalError):
    def __init__(self, message, denominator=None):
        super().__init__(message)
        self.denominator = denominator


class StencilContaminationError(NumericalError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
