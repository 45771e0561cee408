"""Exception hierarchy."""


class WalkdetError(Exception):
    """Base class for all errors raised by walkdet."""


class ChainError(WalkdetError, ValueError):
    """The transition matrix does not define a valid chain."""


class NegativeEntry(ChainError):
    pass


class RowSumError(ChainError):
    pass


class NotIrreducible(ChainError):
    pass


class NotAperiodic(ChainError):
    pass


class ConvergenceError(WalkdetError, ArithmeticError):
    """An iterative solver did not reach its tolerance."""


class InversionError(WalkdetError, ArithmeticError):
    """No parameter value maps to the requested signal amplitude."""


class StateOutOfRange(WalkdetError, IndexError):
    pass


class SizeTooSmall(WalkdetError, ValueError):
    pass


class Disconnected(WalkdetError, ValueError):
    """A random graph generator exhausted its retry budget."""


class TooManyPaths(WalkdetError, ValueError):
    pass


class DimensionMismatch(WalkdetError, ValueError):
    pass
