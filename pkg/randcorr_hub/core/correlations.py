"""
Тензор корреляций, корреляционные функции, длина корреляций C,
секторные длины C_k и критерий запутанности чистых состояний.

Длина корреляций всегда означает блок полных корреляций: только строки
операторов без единичных множителей.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from randcorr_hub.core.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    InvalidStateError,
)
from randcorr_hub.core.kernels import apply_local
from randcorr_hub.core.models import (
    DensityMatrix,
    PureState,
    QuantumState,
    SystemShape,
)
from randcorr_hub.core.opbasis import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    OperatorBasis,
    gell_mann_basis,
    pauli_basis,
)
from randcorr_hub.core.statekit import partial_trace, purity
from randcorr_hub.infra.storage import storage
from randcorr_hub.infra.settings import settings
from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)

BasisSpec = Union[None, OperatorBasis, Sequence[OperatorBasis]]

UNIT_TOLERANCE = 1e-8
SECTOR_MAX_DIM = 2 ** 10


class CorrelationTensor:
    """
    Коэффициенты T_{μ1..μN} = Tr(ρ σ†_{μ1} ⊗ ... ⊗ σ†_{μN})
    """

    def __init__(self, shape: SystemShape, basis_tags: Sequence[str],
                 coefficients: np.ndarray, full_block_only: bool = False):
        expected = tuple(d * d - (1 if full_block_only else 0)
                         for d in shape.local_dims)
        coefficients = np.asarray(coefficients, dtype=np.complex128)
        if coefficients.shape != expected:
            raise DimensionMismatchError(expected, coefficients.shape,
                                         "формы тензора")
        if not full_block_only:
            origin = coefficients[(0,) * shape.party_count]
            if abs(origin - 1.0) > 1e-10:
                raise InvalidStateError(f"T_0...0 = {origin}, а не 1")
        coefficients.setflags(write=False)
        self._shape = shape
        self._basis_tags = tuple(basis_tags)
        self._coefficients = coefficients
        self._full_block_only = full_block_only

    @property
    def shape(self) -> SystemShape:
        return self._shape

    @property
    def basis_tags(self) -> Tuple[str, ...]:
        return self._basis_tags

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients

    @property
    def full_block_only(self) -> bool:
        return self._full_block_only

    def full_block(self) -> np.ndarray:
        """Блок полных корреляций (все μ_n >= 1)"""
        if self._full_block_only:
            return self._coefficients
        return self._coefficients[(slice(1, None),) * self._shape.party_count]

    def entry(self, indices: Sequence[int]) -> complex:
        """
        Элемент по индексам в полной нумерации (0 -- единичный оператор)
        """
        if self._full_block_only:
            if any(i == 0 for i in indices):
                raise InvalidParameterError("indices", list(indices),
                                            "тензор содержит только полный блок")
            return complex(self._coefficients[tuple(i - 1 for i in indices)])
        return complex(self._coefficients[tuple(indices)])

    def length(self) -> float:
        return float(np.sum(np.abs(self.full_block()) ** 2))

    def is_real(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self._coefficients.imag), initial=0.0) <= tol)

    def rows(self) -> Iterable[Tuple]:
        """Строки (μ1, ..., μN, Re T, Im T) в полной нумерации"""
        offset = 1 if self._full_block_only else 0
        for index in np.ndindex(*self._coefficients.shape):
            value = self._coefficients[index]
            yield tuple(i + offset for i in index) + (float(value.real),
                                                      float(value.imag))


class SectorLengths:
    """
    Секторные длины C_0..C_N: суммы квадратов корреляций ровно k частиц
    """

    def __init__(self, values: Sequence[float]):
        array = np.asarray(values, dtype=float)
        if abs(array[0] - 1.0) > 1e-10:
            raise InvalidStateError(f"C_0 = {array[0]}, а не 1")
        if np.any(array < -1e-10):
            raise InvalidStateError("отрицательная секторная длина")
        array.setflags(write=False)
        self._values = array

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __getitem__(self, k: int) -> float:
        return float(self._values[k])

    def __len__(self) -> int:
        return int(self._values.size)

    def total(self) -> float:
        """1 + C_1 + ... + C_N"""
        return float(math.fsum(self._values))

    def alternating_sum(self) -> float:
        """1 - C_1 + C_2 - ..."""
        signs = (-1.0) ** np.arange(self._values.size)
        return float(math.fsum(signs * self._values))

    def to_list(self) -> List[float]:
        return [float(v) for v in self._values]

    def __repr__(self) -> str:
        return f"SectorLengths({np.round(self._values, 10).tolist()})"


class EntanglementVerdict:
    """Результат критерия C > Π(d_n - 1) для чистого состояния"""

    def __init__(self, length: float, threshold: float, tolerance: float):
        self.length = length
        self.threshold = threshold
        self.margin = length - threshold
        self.entangled = self.margin > tolerance

    def to_dict(self) -> Dict[str, float]:
        return {
            "C": self.length,
            "threshold": self.threshold,
            "margin": self.margin,
            "entangled": self.entangled,
        }

    def __repr__(self) -> str:
        return (f"EntanglementVerdict(entangled={self.entangled}, "
                f"margin={self.margin:.6g})")


def default_basis(d: int) -> OperatorBasis:
    """Паули для кубитов, Гелл-Манн для остальных размерностей"""
    return pauli_basis() if d == 2 else gell_mann_basis(d)


def resolve_bases(shape: SystemShape, basis: BasisSpec) -> List[OperatorBasis]:
    """
    Базис для каждой частицы; один базис применяется ко всем частицам
    """
    if basis is None:
        bases = [default_basis(d) for d in shape.local_dims]
    elif isinstance(basis, OperatorBasis):
        bases = [basis] * shape.party_count
    else:
        bases = list(basis)
    if len(bases) != shape.party_count:
        raise DimensionMismatchError([shape.party_count], [len(bases)],
                                     "числа базисов")
    actual = tuple(b.dim for b in bases)
    if actual != shape.local_dims:
        raise DimensionMismatchError(shape.local_dims, actual,
                                     "размерностей базиса")
    return bases


def adjoint_stacks(bases: Sequence[OperatorBasis],
                    full_block_only: bool) -> List[np.ndarray]:
    stacks = [b.elements if full_block_only else b.full_stack() for b in bases]
    return [s.conj().transpose(0, 2, 1) for s in stacks]


def walk_operator_strings(tensor: np.ndarray, stacks: Sequence[np.ndarray],
                          leaf: Callable[[Tuple[int, ...], np.ndarray], None],
                          first_indices: Optional[Iterable[int]] = None) -> None:
    """
    Обход всех строк операторов в глубину.

    Оператор stacks[n][μ] применяется к оси n тензора (последующие оси,
    например набор векторов носителя, не затрагиваются). Для каждой строки
    вызывается leaf(индексы, образ тензора). first_indices ограничивает
    индекс первой частицы -- так пространство строк делится на части.
    """
    count = len(stacks)

    def descend(current: np.ndarray, party: int, prefix: Tuple[int, ...]) -> None:
        if party == count:
            leaf(prefix, current)
            return
        for mu, operator in enumerate(stacks[party]):
            descend(apply_local(current, operator, party), party + 1,
                    prefix + (mu,))

    first = range(len(stacks[0])) if first_indices is None else first_indices
    for mu in first:
        descend(apply_local(tensor, stacks[0][mu], 0), 1, (mu,))


def _partitioned(task: Callable[[int], float], partitions: int,
                 workers: int) -> List[float]:
    """
    Выполняет task для каждой части; порядок результатов не зависит
    от числа потоков
    """
    if workers <= 1 or partitions <= 1:
        return [task(i) for i in range(partitions)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(partitions)))


def _pure_tensor(psi: PureState, bases: Sequence[OperatorBasis],
                 full_block_only: bool) -> np.ndarray:
    stacks = adjoint_stacks(bases, full_block_only)
    result = np.zeros(tuple(len(s) for s in stacks), dtype=np.complex128)
    bra = psi.tensor()

    def leaf(index, image):
        result[index] = np.vdot(bra, image)

    walk_operator_strings(bra, stacks, leaf)
    return result


def _mixed_tensor(rho: DensityMatrix, bases: Sequence[OperatorBasis],
                  full_block_only: bool) -> np.ndarray:
    n = rho.shape.party_count
    stacks = adjoint_stacks(bases, full_block_only)
    current = rho.tensor()
    for party in range(n):
        # stacks[party][μ, j, i] = (σ_μ†)_{j i}
        current = np.tensordot(current, stacks[party],
                               axes=([0, n - party], [2, 1]))
    return current


def correlation_tensor(state: QuantumState, bases: BasisSpec = None,
                       full_block_only: bool = False) -> CorrelationTensor:
    """
    Тензор корреляций состояния в заданных локальных базисах

    Args:
        state: PureState или DensityMatrix
        bases: Один базис для всех частиц, список базисов или None
            (Паули / Гелл-Манн)
        full_block_only: Вычислять только блок полных корреляций

    Returns:
        CorrelationTensor
    """
    resolved = resolve_bases(state.shape, bases)
    if isinstance(state, PureState):
        coefficients = _pure_tensor(state, resolved, full_block_only)
    else:
        coefficients = _mixed_tensor(state, resolved, full_block_only)
    return CorrelationTensor(state.shape, [b.tag for b in resolved],
                             coefficients, full_block_only)


def correlation_function(state: QuantumState,
                         directions: Sequence[Sequence[float]]) -> float:
    """
    E(u_1..u_N) = Tr(ρ ⊗_n u_n·σ) для кубитов

    Raises:
        InvalidParameterError: если вектор не единичный (отклонение > 1e-8)
    """
    shape = state.shape
    if not shape.is_qubit:
        raise InvalidStateError("корреляционная функция определена для кубитов")
    vectors = np.asarray(directions, dtype=float)
    if vectors.shape != (shape.party_count, 3):
        raise DimensionMismatchError((shape.party_count, 3), vectors.shape,
                                     "направлений")
    norms = np.linalg.norm(vectors, axis=1)
    if np.max(np.abs(norms - 1.0)) > UNIT_TOLERANCE:
        raise InvalidParameterError("directions", norms.tolist(),
                                    "векторы должны быть единичными")
    operators = [u[0] * PAULI_X + u[1] * PAULI_Y + u[2] * PAULI_Z for u in vectors]
    return float(expectation(state, operators).real)


def expectation(state: QuantumState, operators: Sequence[np.ndarray]) -> complex:
    """Tr(ρ ⊗_n O_n) последовательным применением локальных операторов"""
    image = state.tensor()
    for party, operator in enumerate(operators):
        image = apply_local(image, operator, party)
    if isinstance(state, PureState):
        return complex(np.vdot(state.tensor(), image))
    dim = state.shape.total_dim
    return complex(np.trace(image.reshape(dim, dim)))


def _pure_length(psi: PureState, bases: Sequence[OperatorBasis],
                 workers: int) -> float:
    stacks = adjoint_stacks(bases, full_block_only=True)
    bra = psi.tensor()

    def partition(first: int) -> float:
        squares = []

        def leaf(_index, image):
            value = np.vdot(bra, image)
            squares.append(value.real * value.real + value.imag * value.imag)

        walk_operator_strings(bra, stacks, leaf, first_indices=[first])
        return math.fsum(squares)

    return math.fsum(_partitioned(partition, len(stacks[0]), workers))


def length_of_correlations(state: QuantumState, basis: BasisSpec = None,
                           workers: Optional[int] = None) -> float:
    """
    C = Σ |T_{j1..jN}|² по блоку полных корреляций

    Args:
        state: Чистое или смешанное состояние
        basis: Локальный базис (результат от выбора базиса не зависит)
        workers: Число потоков для перебора строк чистого состояния

    Returns:
        Длина корреляций
    """
    resolved = resolve_bases(state.shape, basis)
    workers = settings.get("workers", 1) if workers is None else workers
    if isinstance(state, PureState):
        return _pure_length(state, resolved, workers)
    block = _mixed_tensor(state, resolved, full_block_only=True)
    return float(math.fsum(np.abs(block.reshape(-1)) ** 2))


def sector_lengths(state: QuantumState, basis: BasisSpec = None) -> SectorLengths:
    """
    C_k -- сумма |T|² по индексам ровно с k ненулевыми позициями
    """
    resolved = resolve_bases(state.shape, basis)
    rho = state.to_density_matrix()
    squares = np.abs(_mixed_tensor(rho, resolved, full_block_only=False)) ** 2
    n = state.shape.party_count
    weights = np.zeros(squares.shape, dtype=int)
    for party, size in enumerate(squares.shape):
        axis_shape = [1] * n
        axis_shape[party] = size
        weights = weights + (np.arange(size) > 0).reshape(axis_shape)
    values = [math.fsum(squares[weights == k]) for k in range(n + 1)]
    return SectorLengths(values)


def entanglement_threshold(shape: SystemShape) -> float:
    """Π (d_n - 1): длина корреляций любого чистого произведения"""
    return float(np.prod([d - 1 for d in shape.local_dims]))


def is_entangled_pure(psi: QuantumState, basis: BasisSpec = None,
                      tolerance: Optional[float] = None) -> EntanglementVerdict:
    """
    Критерий для чистых состояний: запутано тогда и только тогда,
    когда C > (d-1)^N

    Raises:
        InvalidStateError: если передано смешанное состояние
    """
    if not isinstance(psi, PureState):
        raise InvalidStateError("критерий применим только к чистым состояниям")
    tolerance = (settings.get("entanglement_tolerance", 1e-9)
                 if tolerance is None else tolerance)
    length = length_of_correlations(psi, basis)
    return EntanglementVerdict(length, entanglement_threshold(psi.shape), tolerance)


def subset_length(state: QuantumState, parties: Iterable[int],
                  basis: BasisSpec = None) -> float:
    """Длина полных корреляций редуцированного состояния на parties"""
    reduced = partial_trace(state, parties)
    if isinstance(basis, (list, tuple)):
        chosen = sorted(set(parties))
        basis = [basis[p] for p in chosen]
    return length_of_correlations(reduced, basis)


def purity_length_of_correlations(state: QuantumState) -> float:
    """
    C через обращение Мёбиуса по чистотам подсистем:
    C_B = Σ_{A ⊆ B} (-1)^{|B|-|A|} Π_{a∈A} d_a · Tr(ρ_A²)
    """
    shape = state.shape
    n = shape.party_count
    terms = []
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            sign = (-1.0) ** (n - size)
            if size == 0:
                subset_purity = 1.0
            elif size == n:
                subset_purity = purity(state)
            else:
                subset_purity = purity(partial_trace(state, subset))
            weight = float(np.prod([shape.local_dims[p] for p in subset]))
            terms.append(sign * weight * subset_purity)
    return float(math.fsum(terms))


def entanglement_report(state: QuantumState, basis: BasisSpec = None,
                        basis_name: str = "default",
                        workers: Optional[int] = None) -> Dict:
    """
    Сводка {C, sector_lengths, basis, threshold, entangled}

    Секторные длины включаются, если размерность не больше SECTOR_MAX_DIM.
    """
    length = length_of_correlations(state, basis, workers)
    threshold = entanglement_threshold(state.shape)
    report = {
        "dims": list(state.shape.local_dims),
        "kind": "pure" if isinstance(state, PureState) else "mixed",
        "C": length,
        "basis": basis_name,
        "threshold": threshold,
        "entangled": None,
    }
    if state.shape.is_uniform and state.shape.total_dim <= SECTOR_MAX_DIM:
        report["sector_lengths"] = sector_lengths(state, basis).to_list()
    if isinstance(state, PureState):
        tolerance = settings.get("entanglement_tolerance", 1e-9)
        verdict = EntanglementVerdict(length, threshold, tolerance)
        report["entangled"] = verdict.entangled
        report["margin"] = verdict.margin
    return report


def export_tensor_csv(tensor: CorrelationTensor, path: str) -> bool:
    """CSV: одна строка на набор индексов (μ1..μN, Re T, Im T)"""
    n = tensor.shape.party_count
    header = [f"mu{k + 1}" for k in range(n)] + ["re", "im"]
    return storage.save_csv(path, header, tensor.rows())
