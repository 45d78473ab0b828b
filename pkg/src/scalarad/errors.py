"""Exception hierarchy shared by every module in the package."""


class ADError(Exception):
    """Base class for errors raised by scalarad."""


class UsageError(ADError, ValueError):
    """Operands or arguments combined in a way the API does not allow."""


class DomainError(ADError, ValueError):
    """A value lies outside the domain an operation accepts."""


class ArityError(UsageError):
    """Input or tangent length does not match the declared size."""


class NotSPDError(ADError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""


class RankDeficiencyError(ADError, ArithmeticError):
    """Normal-equations system is singular; use a positive damping."""
