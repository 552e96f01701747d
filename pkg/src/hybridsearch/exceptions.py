"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: ``NumericalError`` and
``ConvergenceError`` exit with 3, ``CapacityError`` with 4.
"""


class HybridSearchError(Exception):
    """Base class for all package errors."""


class CapacityError(HybridSearchError, ValueError):
    """A requested system exceeds the dense-storage or density-matrix cap."""


class NumericalError(HybridSearchError, ArithmeticError):
    """Norm/trace drift, eigensolver trouble or a non-finite integrand."""


class ConvergenceError(NumericalError):
    """An iterative procedure failed to converge (root bracket, mesh inversion)."""


class InfeasibleError(HybridSearchError):
    """No grid point reaches the target success probability within ``r_max`` runs."""
