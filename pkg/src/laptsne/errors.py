"""Exception taxonomy shared across the package."""


class LaptsneError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LaptsneError):
    """A parameter value is outside its documented domain."""


class InvalidData(LaptsneError):
    """Input data violates a precondition (non-finite values, bad shape)."""


class DimensionError(LaptsneError):
    """Operand shapes are inconsistent."""


class DegenerateDegree(LaptsneError):
    """A graph vertex has (near-)zero degree and degree flooring is off."""


class SpectralError(LaptsneError):
    """An eigensolve failed to produce usable eigenpairs."""


class DivergenceError(LaptsneError):
    """The optimization produced a non-finite or exploding objective."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class ParseError(LaptsneError):
    """An input file could not be parsed; carries the offending location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column
