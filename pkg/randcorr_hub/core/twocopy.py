"""
Двухкопийный оператор S = ⊗_n S^{nn'}, S^{nn'} = Σ_j σ_j† ⊗ σ_j, и
твирл Вернера (U ⊗ U) X (U† ⊗ U†) в аналитической форме a·I + b·P.
"""

import math
from typing import Dict, Optional

import numpy as np

from randcorr_hub.core.exceptions import (
    DimensionMismatchError,
    InconsistentResultError,
    InvalidOperatorError,
    InvalidStateError,
    SizeGuardError,
)
from randcorr_hub.core.models import DensityMatrix, PureState
from randcorr_hub.core.opbasis import OperatorBasis, gell_mann_basis
from randcorr_hub.infra.settings import settings
from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)

SPECTRUM_TOLERANCE = 1e-9


def swap_operator(d: int) -> np.ndarray:
    """P|ij⟩ = |ji⟩, матрица d² x d²"""
    swap = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    return swap


def s_operator(d: int, basis: Optional[OperatorBasis] = None) -> np.ndarray:
    """
    S^{nn'} = Σ_j σ_j† ⊗ σ_j по бесследовым элементам базиса (равно dP - I)
    """
    basis = gell_mann_basis(d) if basis is None else basis
    if basis.dim != d:
        raise DimensionMismatchError([d], [basis.dim], "размерности базиса")
    result = np.zeros((d * d, d * d), dtype=np.complex128)
    for element in basis.elements:
        result += np.kron(element.conj().T, element)
    return result


def s_operator_spectrum_check(d: int) -> Dict:
    """
    Диагонализует S^{nn'} и проверяет кратности:
    d-1 (x d(d+1)/2) и -(d+1) (x d(d-1)/2)

    Raises:
        InconsistentResultError: если спектр отличается от ожидаемого
    """
    matrix = s_operator(d)
    eigenvalues = np.linalg.eigvalsh(matrix)
    upper = int(np.sum(np.abs(eigenvalues - (d - 1)) < SPECTRUM_TOLERANCE))
    lower = int(np.sum(np.abs(eigenvalues + (d + 1)) < SPECTRUM_TOLERANCE))
    expected_upper = d * (d + 1) // 2
    expected_lower = d * (d - 1) // 2
    trace = float(np.trace(matrix).real)
    report = {
        "d": d,
        "eigenvalues": sorted(float(v) for v in eigenvalues),
        "multiplicity_symmetric": upper,
        "multiplicity_antisymmetric": lower,
        "expected_symmetric": expected_upper,
        "expected_antisymmetric": expected_lower,
        "trace": trace,
    }
    report["passed"] = (upper == expected_upper and lower == expected_lower
                        and abs(trace) < SPECTRUM_TOLERANCE)
    logger.debug(f"Спектр S для d={d}: {upper} x {d - 1}, {lower} x {-(d + 1)}")
    if not report["passed"]:
        raise InconsistentResultError("кратности спектра S", upper,
                                      expected_upper, SPECTRUM_TOLERANCE)
    return report


def two_copy_length(psi: PureState, basis: Optional[OperatorBasis] = None) -> float:
    """
    C = ⟨ΨΨ|S|ΨΨ⟩: S^{nn'} применяется к паре осей (n, n') тензора Ψ⊗Ψ,
    полный оператор S не строится

    Raises:
        InvalidStateError: для смешанного состояния
        SizeGuardError: если размерность больше 2^max_two_copy_qubits
    """
    if not isinstance(psi, PureState):
        raise InvalidStateError("двухкопийная длина считается для чистых состояний")
    shape = psi.shape
    if not shape.is_uniform:
        raise InvalidStateError("нужна одинаковая локальная размерность")
    limit = settings.get("max_two_copy_qubits", 8)
    if shape.total_dim > 2 ** limit:
        raise SizeGuardError("размерности для двух копий", 2 ** limit,
                             shape.total_dim)

    n = shape.party_count
    d = shape.uniform_dim()
    local = s_operator(d, basis).reshape(d, d, d, d)
    ket = psi.tensor()
    pair = np.multiply.outer(ket, ket)
    image = pair
    for party in range(n):
        image = np.tensordot(local, image, axes=([2, 3], [party, n + party]))
        image = np.moveaxis(image, [0, 1], [party, n + party])
    return float(np.vdot(pair, image).real)


def twirl_operator(operator: np.ndarray, d: int) -> np.ndarray:
    """
    ∫dU (U⊗U) X (U⊗U)† = a·I + b·P, где
    d²a + d b = Tr X и d a + d² b = Tr(X P)
    """
    matrix = np.asarray(operator, dtype=np.complex128)
    if matrix.shape != (d * d, d * d):
        raise InvalidOperatorError(
            f"ожидалась матрица {d * d}x{d * d}, получено {matrix.shape}"
        )
    swap = swap_operator(d)
    system = np.array([[d * d, d], [d, d * d]], dtype=float)
    rhs = np.array([np.trace(matrix), np.trace(matrix @ swap)])
    a, b = np.linalg.solve(system, rhs)
    return a * np.eye(d * d) + b * swap


def werner_twirl(rho: DensityMatrix) -> DensityMatrix:
    """
    Твирл двухчастичного состояния: результат -- состояние Вернера
    (I - αP)/(d² - dα)
    """
    shape = rho.shape
    if shape.party_count != 2:
        raise DimensionMismatchError([2], [shape.party_count], "числа частиц")
    if shape.local_dims[0] != shape.local_dims[1]:
        raise DimensionMismatchError([shape.local_dims[0]] * 2,
                                     shape.local_dims, "размерностей частиц")
    d = shape.local_dims[0]
    return DensityMatrix(shape, twirl_operator(rho.matrix, d))


def werner_alpha(werner: DensityMatrix) -> float:
    """α в записи (I - αP)/(d² - dα) для состояния вида a·I + b·P"""
    d = werner.shape.local_dims[0]
    swap = swap_operator(d)
    a, b = np.linalg.solve(
        np.array([[d * d, d], [d, d * d]], dtype=float),
        np.array([1.0, float(np.trace(werner.matrix @ swap).real)]),
    )
    if math.isclose(a, 0.0, abs_tol=1e-15):
        raise InvalidStateError("вырожденная запись Вернера (a = 0)")
    return float(-b / a)
