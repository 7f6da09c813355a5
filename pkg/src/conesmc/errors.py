"""Exception hierarchy shared across the package."""


class SMCError(Exception):
    """Base class for all errors raised by conesmc."""


class DimensionError(SMCError, ValueError):
    pass


class SingularSystem(SMCError, ArithmeticError):
    """A linear system was not invertible to working precision."""


class NoSolution(SMCError):
    """No sign pattern produced a nonnegative magnitude vector."""


class EigenvalueTooSmall(SMCError, ValueError):
    pass


class NoNonnegativeEigenvector(SMCError, ValueError):
    """The chosen eigenspace holds no sign-definite eigenvector."""


class AdmissibilityViolation(SMCError):
    """No supported induced norm of the upper bound matrix is below one."""


class NegativeEntries(SMCError, ValueError):
    pass


class SingularDecomposition(SMCError, ArithmeticError):
    pass


class DecompositionMismatch(SMCError, ValueError):
    """M @ Q does not reproduce the nominal gain matrix."""


class SingularFactor(SingularDecomposition):
    pass


class AllParticlesInfeasible(SMCError):
    pass


class InfeasibleScale(SMCError, ValueError):
    """Scaled relative uncertainty would drive a parameter non-positive."""


class SingularMassMatrix(SMCError, ArithmeticError):
    pass


class DegenerateInertia(SMCError, ArithmeticError):
    pass


class StateGuardViolation(SMCError):
    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class SolverFailure(SMCError):
    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state
