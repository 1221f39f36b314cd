"""Exception hierarchy shared by every module."""


class LambdaError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class InconsistentDescriptor(LambdaError):
    pass


class HorizonExhausted(LambdaError):
    pass


class ReplayConflict(LambdaError):
    pass


class ContextMismatch(LambdaError):
    pass


class DivisionByZero(LambdaError, ZeroDivisionError):
    pass


class Undecided(LambdaError):
    pass


class DomainViolation(LambdaError):
    pass


class LevelMismatch(LambdaError):
    pass


class QuadratureFailure(LambdaError):
    pass


class UnsupportedBasis(LambdaError):
    pass


class NonConvergence(LambdaError):
    """Carries the best result found so far in ``result``."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ParseError(LambdaError):
    pass
