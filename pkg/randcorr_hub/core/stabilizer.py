"""
Стабилизаторные группы кубитов в симплектическом представлении и быстрый
подсчёт длины корреляций стабилизаторного состояния.

Элемент группы -- строка Паули с битовыми масками x и z (бит q
соответствует кубиту q). Для стабилизаторного состояния каждое среднее
строки Паули равно ±1 (элемент группы) или 0, поэтому C равна числу
элементов группы без единичных множителей.
"""

from typing import Iterable, List, Sequence, Tuple

import networkx as nx
import numpy as np

from randcorr_hub.core.exceptions import (
    DependentGeneratorsError,
    InvalidParameterError,
    NonCommutingGeneratorsError,
    SizeGuardError,
)
from randcorr_hub.core.kernels import apply_local
from randcorr_hub.core.models import STATE_TOLERANCE, PureState
from randcorr_hub.core.opbasis import PAULI_X, PAULI_Y, PAULI_Z
from randcorr_hub.infra.settings import settings
from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_LETTER_MATRIX = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

# размер внутреннего блока перебора: 2^20 элементов
_CHUNK_GENERATORS = 20


def _popcount(value: int) -> int:
    return bin(value).count("1")


def symplectic_product(first: Tuple[int, int], second: Tuple[int, int]) -> int:
    """0, если строки коммутируют, 1 -- если антикоммутируют"""
    x1, z1 = first
    x2, z2 = second
    return (_popcount(x1 & z2) + _popcount(z1 & x2)) % 2


def gf2_rank(rows: Iterable[int]) -> int:
    """Ранг набора битовых строк над GF(2)"""
    pivots: List[int] = []
    for row in rows:
        for pivot in pivots:
            row = min(row, row ^ pivot)
        if row:
            pivots.append(row)
            pivots.sort(reverse=True)
    return len(pivots)


class StabilizerGroup:
    """
    Группа, порождённая N независимыми коммутирующими строками Паули
    """

    def __init__(self, n: int, generators: Sequence[Tuple[int, int, int]]):
        if n < 1:
            raise InvalidParameterError("n", n, "число кубитов должно быть >= 1")
        if len(generators) != n:
            raise InvalidParameterError("generators", len(generators),
                                        f"нужно ровно {n} генераторов")
        mask = (1 << n) - 1
        rows = []
        for x, z, sign in generators:
            if x & ~mask or z & ~mask:
                raise InvalidParameterError("generators", (x, z),
                                            "биты вне диапазона кубитов")
            if sign not in (1, -1):
                raise InvalidParameterError("sign", sign, "знак должен быть ±1")
            rows.append((int(x), int(z), int(sign)))

        for i in range(n):
            for j in range(i + 1, n):
                if symplectic_product(rows[i][:2], rows[j][:2]):
                    raise NonCommutingGeneratorsError(i, j)
        rank = gf2_rank((x << n) | z for x, z, _ in rows)
        if rank != n:
            raise DependentGeneratorsError(rank, n)

        self._n = n
        self._generators = tuple(rows)

    @property
    def n(self) -> int:
        return self._n

    @property
    def generators(self) -> Tuple[Tuple[int, int, int], ...]:
        return self._generators

    @property
    def order(self) -> int:
        return 2 ** self._n

    @classmethod
    def from_strings(cls, strings: Sequence[str]) -> "StabilizerGroup":
        """
        Группа из строк вида "XXX", "-ZZI", "+IZZ"
        """
        if not strings:
            raise InvalidParameterError("strings", strings, "пустой список")
        n = len(strings[0].lstrip("+-"))
        generators = []
        for text in strings:
            sign = -1 if text.startswith("-") else 1
            body = text.lstrip("+-").upper()
            if len(body) != n:
                raise InvalidParameterError("strings", text,
                                            "строки разной длины")
            x = z = 0
            for qubit, letter in enumerate(body):
                if letter not in _LETTER_BITS:
                    raise InvalidParameterError("strings", text,
                                                f"неизвестный символ '{letter}'")
                xb, zb = _LETTER_BITS[letter]
                x |= xb << qubit
                z |= zb << qubit
            generators.append((x, z, sign))
        return cls(n, generators)

    @classmethod
    def ghz(cls, n: int) -> "StabilizerGroup":
        """⟨X...X, Z_q Z_{q+1}⟩ -- стабилизатор GHZ_N"""
        if n < 2:
            raise InvalidParameterError("n", n, "GHZ требует N >= 2")
        full = (1 << n) - 1
        generators = [(full, 0, 1)]
        generators += [(0, (1 << q) | (1 << (q + 1)), 1) for q in range(n - 1)]
        return cls(n, generators)

    @classmethod
    def from_graph(cls, graph: nx.Graph) -> "StabilizerGroup":
        """K_a = Z_a ⊗_{b∈N(a)} X_b для каждого узла графа"""
        n = graph.number_of_nodes()
        if sorted(graph.nodes) != list(range(n)):
            raise InvalidParameterError("graph", list(graph.nodes),
                                        "узлы должны быть пронумерованы 0..N-1")
        generators = []
        for a in range(n):
            x = 0
            for b in graph.neighbors(a):
                x |= 1 << b
            generators.append((x, 1 << a, 1))
        return cls(n, generators)

    def generator_string(self, index: int) -> str:
        x, z, sign = self._generators[index]
        letters = "".join(
            _BITS_LETTER[((x >> q) & 1, (z >> q) & 1)] for q in range(self._n)
        )
        return ("-" if sign < 0 else "+") + letters

    def stabilizes(self, psi: PureState, tol: float = STATE_TOLERANCE) -> bool:
        """Проверяет g|ψ⟩ = |ψ⟩ для всех генераторов"""
        if not psi.shape.is_qubit or psi.shape.party_count != self._n:
            return False
        original = psi.tensor()
        for index in range(self._n):
            text = self.generator_string(index)
            image = original * (-1.0 if text[0] == "-" else 1.0)
            for qubit, letter in enumerate(text[1:]):
                if letter != "I":
                    image = apply_local(image, _LETTER_MATRIX[letter], qubit)
            if np.max(np.abs(image - original)) > tol:
                return False
        return True

    def __repr__(self) -> str:
        strings = ", ".join(self.generator_string(i) for i in range(self._n))
        return f"StabilizerGroup(n={self._n}, [{strings}])"


def _span(rows: Sequence[Tuple[int, int, int]]) -> Tuple[np.ndarray, np.ndarray]:
    """Маски x и z всех 2^len(rows) произведений"""
    xs = np.zeros(1, dtype=np.int64)
    zs = np.zeros(1, dtype=np.int64)
    for x, z, _sign in rows:
        xs = np.concatenate([xs, xs ^ x])
        zs = np.concatenate([zs, zs ^ z])
    return xs, zs


def stabilizer_length_of_correlations(group: StabilizerGroup) -> int:
    """
    C стабилизаторного состояния: число элементов группы, у которых
    (x | z) покрывает все кубиты

    Перебор 2^N элементов блоками по 2^20; N ограничено квадратом
    max_cluster_side.
    """
    limit = settings.get("max_cluster_side", 5) ** 2
    if group.n > limit:
        raise SizeGuardError("кубитов в стабилизаторной группе", limit, group.n)

    full = (1 << group.n) - 1
    inner = group.generators[:_CHUNK_GENERATORS]
    outer = group.generators[_CHUNK_GENERATORS:]
    inner_x, inner_z = _span(inner)
    outer_x, outer_z = _span(outer)

    count = 0
    for ox, oz in zip(outer_x.tolist(), outer_z.tolist()):
        support = (inner_x ^ ox) | (inner_z ^ oz)
        count += int(np.count_nonzero(support == full))
    logger.debug(f"Стабилизаторный подсчёт: n={group.n}, C={count}")
    return count
