"""Exception types raised by macrocap."""


class MacrocapError(Exception):
    """Base class for all library errors."""


class DomainError(MacrocapError, ValueError):
    """Argument outside the domain of a special function or engine."""


class ShapeError(MacrocapError, ValueError):
    """Matrix has the wrong shape or orientation."""


class DefinitenessError(MacrocapError, ValueError):
    """Matrix is not (Hermitian) positive definite.

    Attributes
    ----------
    pivot : int or None
        Zero-based index of the first failing Cholesky pivot, when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DegeneracyError(MacrocapError, ArithmeticError):
    """Closed form cannot be evaluated reliably, even after jitter."""


class ModelError(MacrocapError, ValueError):
    """Input violates a modelling assumption (e.g. non-constant block power)."""


class ConfigError(MacrocapError, ValueError):
    """Invalid run configuration. ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
