"""
Тензорные ядра: применение локальных операторов к векторам состояний
без построения полной матрицы строки операторов.
"""

import string

import numpy as np

_LETTERS = string.ascii_letters


def apply_local(tensor: np.ndarray, operator: np.ndarray, axis: int) -> np.ndarray:
    """
    Применяет оператор к одной оси тензора (остальные оси не меняются)
    """
    moved = np.tensordot(operator, tensor, axes=([1], [axis]))
    return np.moveaxis(moved, 0, axis)


def apply_local_batch(tensors: np.ndarray, operators: np.ndarray,
                      axis: int) -> np.ndarray:
    """
    Пакетный вариант: tensors формы (B, d_1..d_N), operators формы (B, d, d),
    axis -- номер частицы (без учёта пакетной оси)
    """
    rank = tensors.ndim - 1
    if rank + 2 > len(_LETTERS):
        raise ValueError("слишком много частиц для einsum")
    party = _LETTERS[:rank]
    target = _LETTERS[rank + 1]
    batch = _LETTERS[rank]
    source = party[axis]
    result = party[:axis] + target + party[axis + 1:]
    spec = f"{batch}{target}{source},{batch}{party}->{batch}{result}"
    return np.einsum(spec, operators, tensors, optimize=False)


def expectation_batch(bra: np.ndarray, kets: np.ndarray) -> np.ndarray:
    """⟨bra|ket_b⟩ для каждого элемента пакета"""
    flat_bra = bra.reshape(-1)
    flat_kets = kets.reshape(kets.shape[0], -1)
    return flat_kets @ flat_bra.conj()
