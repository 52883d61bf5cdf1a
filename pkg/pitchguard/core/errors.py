"""
Иерархия исключений pitchguard.

InputError - ошибки входных данных и конфигурации (код выхода 1),
NumericError - численные сбои моделей (код выхода 2).
Контекст ошибки (строка, игрок, пара индексов, фолд) хранится в атрибутах.
"""
from typing import Any


class PitchguardError(Exception):
    """Базовое исключение проекта."""

    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context
        for key, value in context.items():
            setattr(self, key, value)


class InputError(PitchguardError):
    exit_code = 1


class NumericError(PitchguardError):
    exit_code = 2


# ingest
class MissingColumnError(InputError):
    pass


class MalformedRowError(InputError):
    pass


class DuplicateDayError(InputError):
    pass


class TruncationTooDeepError(InputError):
    pass


class NonPositiveResponseError(InputError):
    pass


class EmptyWeekSetError(InputError):
    pass


class OutOfRangeError(InputError):
    pass


class InvalidSpecError(InputError):
    pass


class ConfigError(InputError):
    pass


# dtw / kernels
class EmptySequenceError(InputError):
    pass


class TooLargeError(InputError):
    pass


class InputKindMismatchError(InputError):
    pass


# gp
class SingularSystemError(NumericError):
    pass


class NoAcceptedSettingError(NumericError):
    pass


# glm
class RankDeficientError(NumericError):
    pass


class NotNestedError(InputError):
    pass


class RefitFailureError(NumericError):
    pass


# spca
class AllColumnsDegenerateError(InputError):
    pass


class NumericalFailureError(NumericError):
    pass


class TooFewSurvivorsError(InputError):
    pass


class MissingFeatureError(InputError):
    pass


# metrics
class LengthMismatchError(InputError):
    pass


class ConstantVectorError(NumericError):
    pass


class DegenerateAgreementError(NumericError):
    pass


class UnknownLabelError(InputError):
    pass


# eval
class FoldTooSmallError(InputError):
    pass


class EmptyTrainingError(InputError):
    pass
