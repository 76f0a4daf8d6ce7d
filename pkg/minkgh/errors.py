"""Exception hierarchy.

Input problems derive from ``ValueError`` and map to CLI exit status 2;
numerical failures derive from ``RuntimeError`` and map to exit status 3.
"""

from __future__ import annotations


class MinkghError(Exception):
    pass


class InputValidationError(MinkghError, ValueError):
    exit_code = 2


class NumericalFailure(MinkghError, RuntimeError):
    exit_code = 3


class DimensionMismatchError(InputValidationError):
    pass


class NotLorentzError(InputValidationError):
    pass


class TimeReversingError(InputValidationError):
    pass


class OrientationReversingError(InputValidationError):
    pass


class NotLightlikeError(InputValidationError):
    pass


class ClassificationMismatchError(InputValidationError):
    """Operation called on an isometry of the wrong family."""


class EmptyLambdaError(InputValidationError):
    pass


class OutsideDomainError(InputValidationError):
    pass


class RelationResidualError(InputValidationError):
    pass


class ModelParameterError(InputValidationError):
    pass


class SymExtInputError(InputValidationError):
    pass


class NotSpacelikeError(InputValidationError):
    pass


class UnboundedFaceError(NumericalFailure):
    pass


class QPFailure(NumericalFailure):
    pass


class EnumerationLimitError(NumericalFailure):
    pass


class WitnessNotFoundError(NumericalFailure):
    pass


class ConstructionFailure(NumericalFailure):
    pass


class LevelSetBracketError(NumericalFailure):
    pass
