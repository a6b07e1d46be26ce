"""Exception types raised across the package."""


class SandpileError(Exception):
    """Base class for all errors raised by :mod:`sandpile`."""


# graph construction / validation
class EmptyVertexSet(SandpileError, ValueError):
    pass


class DisconnectedGraph(SandpileError, ValueError):
    pass


class BadIndex(SandpileError, IndexError):
    pass


class BadParameter(SandpileError, ValueError):
    pass


# dynamics
class IllegalToppling(SandpileError):
    """Raised when a half-toppling is requested at a stable site."""


class StepCapExceeded(SandpileError, RuntimeError):
    """A stabilization or chain run did not finish within its step cap."""


class UnsupportedThreshold(SandpileError, ValueError):
    pass


class UnreachablePair(SandpileError, ValueError):
    """An (eta, h) pair that legal half-topplings can never produce."""


class InvalidState(SandpileError, ValueError):
    pass


# oracle
class StateCapExceeded(SandpileError, RuntimeError):
    pass


class SingularSystem(SandpileError, ArithmeticError):
    pass


class NotIrreducible(SandpileError, ValueError):
    pass


class NumericalFailure(SandpileError, ArithmeticError):
    pass
