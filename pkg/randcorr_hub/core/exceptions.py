from typing import Optional, Sequence


class RandCorrError(Exception):
    pass


class InvalidStateError(RandCorrError):

    def __init__(self, reason: str):
        self.reason = reason
        message = f"Некорректное состояние: {reason}"
        super().__init__(message)


class DimensionMismatchError(RandCorrError):

    def __init__(self, expected: Sequence[int], actual: Sequence[int],
                 what: str = "размерности"):
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        message = (
            f"Несовпадение {what}: ожидалось {self.expected}, "
            f"получено {self.actual}"
        )
        super().__init__(message)


class InvalidBasisError(RandCorrError):

    def __init__(self, basis_name: str, reason: str):
        self.basis_name = basis_name
        self.reason = reason
        message = f"Базис '{basis_name}' некорректен: {reason}"
        super().__init__(message)


class UnknownStateError(RandCorrError):

    def __init__(self, name: str):
        self.name = name
        message = f"Неизвестное состояние '{name}'"
        super().__init__(message)


class InvalidParameterError(RandCorrError):

    def __init__(self, name: str, value, reason: str):
        self.name = name
        self.value = value
        self.reason = reason
        message = f"Некорректный параметр {name}={value!r}: {reason}"
        super().__init__(message)


class SizeGuardError(RandCorrError):

    def __init__(self, what: str, limit: int, actual: int):
        self.what = what
        self.limit = limit
        self.actual = actual
        message = (
            f"Превышен предел размера для {what}: "
            f"допустимо {limit}, запрошено {actual}"
        )
        super().__init__(message)


class NonCommutingGeneratorsError(RandCorrError):

    def __init__(self, first: int, second: int):
        self.first = first
        self.second = second
        message = f"Генераторы {first} и {second} не коммутируют"
        super().__init__(message)


class DependentGeneratorsError(RandCorrError):

    def __init__(self, rank: int, count: int):
        self.rank = rank
        self.count = count
        message = (
            f"Генераторы линейно зависимы: ранг {rank} при {count} генераторах"
        )
        super().__init__(message)


class RankMismatchError(RandCorrError):

    def __init__(self, expected: str, actual: int):
        self.expected = expected
        self.actual = actual
        message = f"Неподходящий ранг состояния: требуется {expected}, ранг {actual}"
        super().__init__(message)


class AsymmetricMatrixError(RandCorrError):

    def __init__(self, what: str, deviation: float):
        self.what = what
        self.deviation = deviation
        message = f"Матрица {what} несимметрична: отклонение {deviation:.3e}"
        super().__init__(message)


class InvalidOperatorError(RandCorrError):

    def __init__(self, reason: str):
        self.reason = reason
        message = f"Некорректный начальный оператор: {reason}"
        super().__init__(message)


class CalibrationError(RandCorrError):

    def __init__(self, trials: int, required: int):
        self.trials = trials
        self.required = required
        message = (
            f"Недостаточно испытаний для калибровки: {trials}, "
            f"нужно не меньше {required}"
        )
        super().__init__(message)


class InconsistentResultError(RandCorrError):

    def __init__(self, what: str, first: float, second: float,
                 tolerance: float):
        self.what = what
        self.first = first
        self.second = second
        self.tolerance = tolerance
        message = (
            f"Расхождение в {what}: {first!r} и {second!r} "
            f"(допуск {tolerance:.1e})"
        )
        super().__init__(message)


class StateFileError(RandCorrError):

    def __init__(self, path: str, reason: Optional[str] = None):
        self.path = path
        self.reason = reason or "неизвестная ошибка"
        message = f"Ошибка чтения файла состояния '{path}': {self.reason}"
        super().__init__(message)


class ResultWriteError(RandCorrError):

    def __init__(self, path: str):
        self.path = path
        message = f"Не удалось записать результат '{path}'"
        super().__init__(message)
