"""Exception hierarchy shared by every module."""


class NslyapError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(NslyapError, ValueError):
    pass


class EmptySetError(NslyapError, ValueError):
    """A set description turned out to be empty."""


class NonConvergence(NslyapError, RuntimeError):
    pass


class PointNotInSet(NslyapError, ValueError):
    pass


class Unbounded(NslyapError, ValueError):
    """A linear objective is unbounded below on the set."""


class UnsupportedVariant(NslyapError, NotImplementedError):
    pass


class DomainViolation(NslyapError, ValueError):
    pass


class NotConvex(NslyapError, ValueError):
    pass


class UnboundedBelow(NslyapError, ValueError):
    pass


class NotNonnegative(NslyapError, ValueError):
    pass


class NotMonotone(NslyapError, ValueError):
    pass


class OutsideDomain(NslyapError, ValueError):
    pass


class SolverFailure(NslyapError, RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg if residual is None else f"{msg} (residual {residual:.3e})")
        self.residual = residual


class StepTooLarge(NslyapError, ValueError):
    pass


class BallNotInterior(NslyapError, ValueError):
    pass


class NotInterior(NslyapError, ValueError):
    pass


class EmptySampleSet(NslyapError, ValueError):
    pass


class ZeroCoefficient(NslyapError, ValueError):
    pass


class SetupViolation(NslyapError, ValueError):
    pass


class NotLipschitz(NslyapError, ValueError):
    pass


class NoSolution(NslyapError, RuntimeError):
    pass


class IterationCap(NslyapError, RuntimeError):
    pass


class NotRepresentable(NslyapError, ValueError):
    pass


class SchemaError(NslyapError, ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
