"""
Локальные операторные базисы {I, σ_1, ..., σ_{d²-1}} с условиями
Tr(σ_j) = 0 и Tr(σ_j σ_k†) = d δ_jk.

Порядок элементов фиксирован:
  * Гелл-Манн: все G⁺_mn (m < n лексикографически), затем G⁻_mn, затем λ_l;
  * Вейль-Гейзенберг: X^m Z^n для (m, n) в лексикографическом порядке
    без (0, 0).
"""

from functools import lru_cache
from typing import Optional

import numpy as np

from randcorr_hub.core.exceptions import InvalidBasisError, InvalidParameterError
from randcorr_hub.core.sampling import haar_unitaries, make_rng

BASIS_TOLERANCE = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


class OperatorBasis:
    """
    Базис бесследовых операторов размерности d (единица неявно имеет индекс 0)
    """

    def __init__(self, dim: int, elements: np.ndarray, tag: str,
                 alpha: Optional[np.ndarray] = None):
        stack = np.array(elements, dtype=np.complex128)
        if stack.shape != (dim * dim - 1, dim, dim):
            raise InvalidBasisError(
                tag, f"ожидалось {dim * dim - 1} матриц {dim}x{dim}, "
                     f"получено {stack.shape}"
            )
        stack.setflags(write=False)
        self._dim = dim
        self._elements = stack
        self._tag = tag
        self._alpha = alpha
        validate_basis(self)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def elements(self) -> np.ndarray:
        """Бесследовые элементы σ_1..σ_{d²-1}, форма (d²-1, d, d)"""
        return self._elements

    @property
    def tag(self) -> str:
        return self._tag

    @property
    def alpha(self) -> Optional[np.ndarray]:
        """Смешивающая унитарная матрица для случайного базиса"""
        return self._alpha

    @property
    def is_hermitian(self) -> bool:
        return bool(np.allclose(self._elements,
                                self._elements.conj().transpose(0, 2, 1),
                                atol=BASIS_TOLERANCE))

    def full_stack(self) -> np.ndarray:
        """Все операторы с единицей на нулевом месте, форма (d², d, d)"""
        identity = np.eye(self._dim, dtype=np.complex128)[np.newaxis]
        return np.concatenate([identity, self._elements])

    def __len__(self) -> int:
        return self._elements.shape[0]

    def __repr__(self) -> str:
        return f"OperatorBasis(dim={self._dim}, tag='{self._tag}')"


def validate_basis(basis: OperatorBasis) -> None:
    """
    Проверяет условия Tr(σ_j) = 0 и Tr(σ_j σ_k†) = d δ_jk

    Raises:
        InvalidBasisError: если условия нарушены больше чем на 1e-10
    """
    elements = basis.elements
    d = basis.dim
    traces = np.einsum('jii->j', elements)
    if np.max(np.abs(traces), initial=0.0) > BASIS_TOLERANCE:
        raise InvalidBasisError(basis.tag, "элементы базиса не бесследовые")
    gram = np.einsum('jab,kab->jk', elements, elements.conj())
    deviation = np.max(np.abs(gram - d * np.eye(len(elements))), initial=0.0)
    if deviation > BASIS_TOLERANCE:
        raise InvalidBasisError(
            basis.tag, f"нарушена ортонормировка Tr(σσ†) = d ({deviation:.3e})"
        )


def _check_dim(d: int) -> None:
    if int(d) != d or d < 2:
        raise InvalidParameterError("d", d, "размерность должна быть >= 2")


@lru_cache(maxsize=None)
def pauli_basis() -> OperatorBasis:
    """σ_x, σ_y, σ_z"""
    return OperatorBasis(2, np.stack([PAULI_X, PAULI_Y, PAULI_Z]), "pauli")


@lru_cache(maxsize=None)
def gell_mann_basis(d: int) -> OperatorBasis:
    """
    Обобщённые матрицы Гелл-Манна (эрмитов базис)

    Args:
        d: Размерность кудита

    Returns:
        Базис из d²-1 матриц: G⁺_mn, G⁻_mn, λ_l
    """
    _check_dim(d)
    plus, minus, diagonal = [], [], []
    scale = np.sqrt(d / 2.0)
    for m in range(d):
        for n in range(m + 1, d):
            g_plus = np.zeros((d, d), dtype=np.complex128)
            g_plus[m, n] = g_plus[n, m] = scale
            plus.append(g_plus)
            g_minus = np.zeros((d, d), dtype=np.complex128)
            g_minus[m, n] = -1j * scale
            g_minus[n, m] = 1j * scale
            minus.append(g_minus)
    for l in range(d - 1):  # noqa: E741
        entries = np.zeros(d)
        entries[:l + 1] = 1.0
        entries[l + 1] = -(l + 1)
        diagonal.append(np.sqrt(d / ((l + 1) * (l + 2))) * np.diag(entries))
    return OperatorBasis(d, np.stack(plus + minus + diagonal), "gell_mann")


def shift_clock(d: int):
    """Операторы сдвига X и фазы Z"""
    x = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


@lru_cache(maxsize=None)
def weyl_heisenberg_basis(d: int) -> OperatorBasis:
    """
    Матрицы Вейля-Гейзенберга W_mn = X^m Z^n, (m, n) != (0, 0) (унитарный базис)
    """
    _check_dim(d)
    x, z = shift_clock(d)
    elements = []
    for m in range(d):
        for n in range(d):
            if m == 0 and n == 0:
                continue
            elements.append(
                np.linalg.matrix_power(x, m) @ np.linalg.matrix_power(z, n)
            )
    return OperatorBasis(d, np.stack(elements), "weyl_heisenberg")


def random_mixed_basis(d: int, seed=None,
                       alpha: Optional[np.ndarray] = None) -> OperatorBasis:
    """
    Базис σ'_j = Σ_k α_jk σ_k из элементов Гелл-Манна и унитарной α

    Args:
        d: Размерность кудита
        seed: Зерно для α с мерой Хаара
        alpha: Явная унитарная матрица (d²-1)x(d²-1) вместо случайной

    Returns:
        Смешанный базис, удовлетворяющий тем же условиям
    """
    _check_dim(d)
    size = d * d - 1
    if alpha is None:
        alpha = haar_unitaries(size, 1, make_rng(seed))[0]
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.shape != (size, size):
        raise InvalidParameterError("alpha", alpha.shape,
                                    f"нужна матрица {size}x{size}")
    elements = np.einsum('jk,kab->jab', alpha, gell_mann_basis(d).elements)
    return OperatorBasis(d, elements, f"mixed:{seed}", alpha=alpha)


def basis_by_name(name: str, d: int) -> OperatorBasis:
    """
    Базис по имени: "pauli" | "gell-mann" | "weyl" | "mixed:<seed>"
    """
    key = name.strip().lower().replace("_", "-")
    if key == "pauli":
        if d != 2:
            raise InvalidParameterError("basis", name,
                                        "базис Паули определён только для d=2")
        return pauli_basis()
    if key in ("gell-mann", "gellmann"):
        return gell_mann_basis(d)
    if key in ("weyl", "weyl-heisenberg"):
        return weyl_heisenberg_basis(d)
    if key.startswith("mixed:"):
        try:
            seed = int(key.split(":", 1)[1])
        except ValueError:
            raise InvalidParameterError("basis", name, "seed должен быть целым")
        return random_mixed_basis(d, seed)
    raise InvalidParameterError("basis", name, "неизвестный базис")


def expand_operator(operator: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """
    Коэффициенты c_j = Tr(σ_j† op)/d разложения op = Σ c_j σ_j
    """
    op = np.asarray(operator, dtype=np.complex128)
    return np.einsum('jab,ab->j', basis.elements.conj(), op) / basis.dim
