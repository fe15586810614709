"""
Exceptions raised by sphere-superres.

Every error kind gets its own class so callers (and the CLI exit codes) can
tell a bad parameter from a solver failure without parsing messages.
"""
import logging
import typing

from .conf import settings


# Try to avoid log-name-context collisions defaulting to __name__
logger = logging.getLogger(__name__)


__all__ = [
    'SphereSuperresException',
    'InvalidParameterException',
    'UndefinedInputException',
    'DomainMismatchException',
    'ShapeMismatchException',
    'GridMismatchException',
    'ImaginaryLeakException',
    'InfeasibleDensityException',
    'InvalidInputException',
    'NonFiniteInputException',
    'StepSizeException',
    'SolverFailureException',
    'fail',
]


# Added specific exception classes to be able to differentiate from
# generic ones.
class SphereSuperresException(Exception):
    pass


class InvalidParameterException(SphereSuperresException):
    pass


class UndefinedInputException(SphereSuperresException):
    pass


class DomainMismatchException(SphereSuperresException):
    pass


class ShapeMismatchException(DomainMismatchException):
    pass


class GridMismatchException(DomainMismatchException):
    pass


class ImaginaryLeakException(SphereSuperresException):
    pass


class InfeasibleDensityException(SphereSuperresException):
    def __init__(self, message: str, achieved_sizes: typing.Sequence[int] = ()):
        super().__init__(message)
        self.achieved_sizes = list(achieved_sizes)


class InvalidInputException(SphereSuperresException):
    pass


class NonFiniteInputException(SphereSuperresException):
    pass


class StepSizeException(SphereSuperresException):
    pass


class SolverFailureException(SphereSuperresException):
    pass


def fail(exception_class: typing.Type[Exception], message: str, **kwargs) -> typing.NoReturn:
    """
    Log (only in DEBUG) and raise. Messages are prefixed with the name of
    the raising function, e.g. 'build_grid: L must be >= 2.'.

    :param exception_class: the class to raise.
    :param message: the message, already formatted.
    :param kwargs: extra keyword arguments for the exception constructor.
    :return: never returns.
    """
    if settings.DEBUG is True:
        logger.error(message)
    raise exception_class(message, **kwargs)
