"""
Генераторы случайных настроек: равномерные направления на сфере и
унитарные матрицы с мерой Хаара, а также детерминированные потоки ГСЧ.
"""

from typing import Optional, Sequence, Union

import numpy as np

SeedLike = Union[None, int, Sequence[int], np.random.SeedSequence]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """Создаёт генератор numpy из seed (int, последовательность или SeedSequence)"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def stream_rng(seed: SeedLike, *keys: int) -> np.random.Generator:
    """
    Независимый поток для блока испытаний с ключом keys (например,
    номер серии и номер блока).

    Поток зависит только от (seed, keys), поэтому результат не зависит
    от порядка выполнения блоков и числа потоков.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))


def uniform_directions(count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Равномерные единичные векторы на сфере, форма (count, 3)
    """
    vectors = rng.standard_normal((count, 3))
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    # нулевой гауссов вектор имеет нулевую вероятность, но не делим на ноль
    norms[norms == 0.0] = 1.0
    return vectors / norms


def haar_unitaries(dim: int, count: int,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Унитарные матрицы Хаара через QR-разложение матрицы Жинибра,
    форма (count, dim, dim)
    """
    rng = rng if rng is not None else np.random.default_rng()
    z = (rng.standard_normal((count, dim, dim))
         + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diagonal = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diagonal / np.abs(diagonal)
    return q * phases[:, np.newaxis, :]
