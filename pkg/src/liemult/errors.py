"""Exception types shared across the library."""


class InvalidInputError(ValueError):
    """Operands are malformed or belong to incompatible instances."""


class ChartDomainError(ValueError):
    """A group element lies outside the domain of the logarithm chart."""


class ParameterError(ValueError):
    """A parameter is outside its admissible range."""


class GridMismatchError(ValueError):
    """Paths that must share a time grid do not."""


class HypothesisError(ValueError):
    """A statistical battery was invoked on a model violating its hypotheses."""


class ConfigError(ValueError):
    """An experiment config violates the schema; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
