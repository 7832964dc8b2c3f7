"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PadicCellsError(Exception):
    """Base class for every error raised by this package."""


class InsufficientPrecision(PadicCellsError):
    pass


class NotIntegral(PadicCellsError):
    pass


class ZeroPolynomial(PadicCellsError):
    pass


class NotSquarefree(PadicCellsError):
    pass


class PrecisionLoss(PadicCellsError):
    pass


class CommonRoot(PadicCellsError):
    pass


class CompositionDomain(PadicCellsError):
    pass


class NotRegular(PadicCellsError):
    pass


class TruncationTooSmall(PadicCellsError):
    pass


class ZeroSeries(PadicCellsError):
    pass


class NotRegularAtTruncation(NotRegular):
    pass


class NotAnAnnulus(PadicCellsError):
    def __init__(self, message: str, witness: object = None):
        super().__init__(message)
        self.witness = witness


class UnsupportedTerm(PadicCellsError):
    pass


class UnsupportedFragment(PadicCellsError):
    pass


class DPSyntaxError(PadicCellsError):
    def __init__(self, message: str, pos: int = -1):
        super().__init__(f"{message} (at offset {pos})" if pos >= 0 else message)
        self.pos = pos


class SortError(PadicCellsError):
    def __init__(self, message: str, pos: int = -1):
        super().__init__(f"{message} (at offset {pos})" if pos >= 0 else message)
        self.pos = pos


class UnsupportedSplit(PadicCellsError):
    def __init__(self, message: str, subproblem: object = None):
        super().__init__(message)
        self.subproblem = subproblem


class Divergent(PadicCellsError):
    def __init__(self, message: str, ray: object = None):
        super().__init__(message)
        self.ray = ray


class NotInRing(PadicCellsError):
    """A denominator 1 - L^b T^a outside the admissible index set arose."""

    def __init__(self, message: str, index: tuple[int, int] | None = None):
        super().__init__(message)
        self.index = index


class TooManyVariables(PadicCellsError):
    pass


class BudgetExceeded(PadicCellsError):
    pass
