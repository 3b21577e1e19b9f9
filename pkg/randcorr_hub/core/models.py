"""
Модели состояний многокудитных систем.

Частицы нумеруются с нуля; частица 0 является старшим тензорным множителем
при индексации амплитуд (row-major).
"""

from typing import Any, Dict, Iterable, Sequence, Tuple, Union

import numpy as np

from randcorr_hub.core.exceptions import InvalidParameterError, InvalidStateError

STATE_TOLERANCE = 1e-10


class SystemShape:
    """
    Форма системы: локальные размерности d_n >= 2 для каждой частицы
    """

    def __init__(self, local_dims: Iterable[int]):
        dims = tuple(int(d) for d in local_dims)
        if len(dims) < 1:
            raise InvalidParameterError("local_dims", dims,
                                        "нужна хотя бы одна частица")
        if any(d < 2 for d in dims):
            raise InvalidParameterError("local_dims", dims,
                                        "каждая размерность должна быть >= 2")
        self._local_dims = dims

    @property
    def local_dims(self) -> Tuple[int, ...]:
        """Возвращает локальные размерности"""
        return self._local_dims

    @property
    def party_count(self) -> int:
        """Возвращает число частиц N"""
        return len(self._local_dims)

    @property
    def total_dim(self) -> int:
        """Возвращает полную размерность пространства"""
        return int(np.prod(self._local_dims))

    @property
    def is_uniform(self) -> bool:
        return len(set(self._local_dims)) == 1

    @property
    def is_qubit(self) -> bool:
        return all(d == 2 for d in self._local_dims)

    def uniform_dim(self) -> int:
        """
        Возвращает общую локальную размерность d

        Raises:
            InvalidStateError: если размерности частиц различны
        """
        if not self.is_uniform:
            raise InvalidStateError(
                f"требуется одинаковая локальная размерность, получено "
                f"{self._local_dims}"
            )
        return self._local_dims[0]

    def subshape(self, parties: Sequence[int]) -> "SystemShape":
        return SystemShape(self._local_dims[p] for p in parties)

    def concat(self, other: "SystemShape") -> "SystemShape":
        return SystemShape(self._local_dims + other.local_dims)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SystemShape) and other.local_dims == self.local_dims

    def __hash__(self) -> int:
        return hash(self._local_dims)

    def __repr__(self) -> str:
        return f"SystemShape(local_dims={list(self._local_dims)})"


class PureState:
    """
    Чистое состояние: нормированный вектор амплитуд длины prod(d_n)
    """

    def __init__(self, shape: SystemShape, amplitudes: Any):
        vector = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if vector.size != shape.total_dim:
            raise InvalidStateError(
                f"длина вектора {vector.size} не равна размерности "
                f"{shape.total_dim}"
            )
        norm = float(np.vdot(vector, vector).real)
        if abs(norm - 1.0) > STATE_TOLERANCE:
            raise InvalidStateError(f"квадрат нормы равен {norm:.12f}, а не 1")
        vector.setflags(write=False)
        self._shape = shape
        self._amplitudes = vector

    @classmethod
    def from_unnormalized(cls, shape: SystemShape, amplitudes: Any) -> "PureState":
        """
        Создаёт состояние, предварительно нормируя вектор
        """
        vector = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise InvalidStateError("нулевой вектор нельзя нормировать")
        return cls(shape, vector / norm)

    @property
    def shape(self) -> SystemShape:
        return self._shape

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    def tensor(self) -> np.ndarray:
        """Амплитуды в виде тензора с осью на каждую частицу"""
        return self._amplitudes.reshape(self._shape.local_dims)

    def projector(self) -> np.ndarray:
        return np.outer(self._amplitudes, self._amplitudes.conj())

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self._shape, self.projector())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dims": list(self._shape.local_dims),
            "kind": "pure",
            "amplitudes": [[float(a.real), float(a.imag)] for a in self._amplitudes],
        }

    def __repr__(self) -> str:
        return f"PureState(dims={list(self._shape.local_dims)})"


class DensityMatrix:
    """
    Смешанное состояние: эрмитова матрица с единичным следом и
    неотрицательным спектром
    """

    def __init__(self, shape: SystemShape, matrix: Any):
        rho = np.array(matrix, dtype=np.complex128)
        dim = shape.total_dim
        if rho.shape != (dim, dim):
            raise InvalidStateError(
                f"матрица размера {rho.shape} не соответствует размерности {dim}"
            )
        hermiticity = float(np.max(np.abs(rho - rho.conj().T)))
        if hermiticity > STATE_TOLERANCE:
            raise InvalidStateError(f"матрица не эрмитова ({hermiticity:.3e})")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > STATE_TOLERANCE:
            raise InvalidStateError(f"след равен {trace.real:.12f}, а не 1")
        smallest = float(np.linalg.eigvalsh(rho)[0])
        if smallest < -STATE_TOLERANCE:
            raise InvalidStateError(
                f"отрицательное собственное значение {smallest:.3e}"
            )
        rho.setflags(write=False)
        self._shape = shape
        self._matrix = rho

    @property
    def shape(self) -> SystemShape:
        return self._shape

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def tensor(self) -> np.ndarray:
        """Матрица в виде тензора с осями (i_1..i_N, j_1..j_N)"""
        dims = self._shape.local_dims
        return self._matrix.reshape(dims + dims)

    def to_density_matrix(self) -> "DensityMatrix":
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dims": list(self._shape.local_dims),
            "kind": "mixed",
            "matrix": [[[float(a.real), float(a.imag)] for a in row]
                       for row in self._matrix],
        }

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={list(self._shape.local_dims)})"


QuantumState = Union[PureState, DensityMatrix]


class SchmidtSpectrum:
    """
    Вероятности Шмидта в порядке убывания
    """

    def __init__(self, probabilities: Iterable[float]):
        values = np.array(list(probabilities), dtype=float)
        if values.size == 0:
            raise InvalidParameterError("probabilities", [], "пустой спектр")
        if np.any(values < -STATE_TOLERANCE):
            raise InvalidParameterError("probabilities", values.tolist(),
                                        "отрицательные вероятности")
        if np.any(np.diff(values) > STATE_TOLERANCE):
            raise InvalidParameterError("probabilities", values.tolist(),
                                        "вероятности должны убывать")
        if abs(values.sum() - 1.0) > STATE_TOLERANCE:
            raise InvalidParameterError("probabilities", values.tolist(),
                                        "сумма должна быть равна 1")
        values = np.clip(values, 0.0, None)
        values.setflags(write=False)
        self._probabilities = values

    @property
    def probabilities(self) -> np.ndarray:
        return self._probabilities

    def padded(self, length: int) -> np.ndarray:
        """Дополняет спектр нулями до заданной длины"""
        result = np.zeros(max(length, self._probabilities.size))
        result[:self._probabilities.size] = self._probabilities
        return result

    def __len__(self) -> int:
        return int(self._probabilities.size)

    def __repr__(self) -> str:
        return f"SchmidtSpectrum({np.round(self._probabilities, 6).tolist()})"


class BlochVector:
    """
    Вектор Блоха в базисе размерности dim (для кубитов -- 3 компоненты)
    """

    def __init__(self, components: Iterable[float], dim: int = 2):
        values = np.array(list(components), dtype=float)
        if values.size != dim * dim - 1:
            raise InvalidParameterError("components", values.size,
                                        f"нужно {dim * dim - 1} компонент")
        length = float(values @ values)
        if length > dim - 1 + STATE_TOLERANCE:
            raise InvalidParameterError("components", length,
                                        f"квадрат длины больше {dim - 1}")
        values.setflags(write=False)
        self._components = values
        self._dim = dim

    @property
    def components(self) -> np.ndarray:
        return self._components

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def squared_length(self) -> float:
        return float(self._components @ self._components)

    def __repr__(self) -> str:
        return f"BlochVector({np.round(self._components, 6).tolist()})"
