"""
Выпуклая крыша E(ρ) длины корреляций: точная формула для состояний
ранга 2, свидетель для ранга m и численный перебор разложений.

Все вычисления идут в носителе ρ: оператор S проектируется на
span{|ĩ⟩} ⊗ span{|ĩ⟩} и раскладывается по матрицам Гелл-Манна
размерности m (Tr σσ = m).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from randcorr_hub.core.correlations import (
    adjoint_stacks,
    entanglement_threshold,
    length_of_correlations,
    resolve_bases,
    walk_operator_strings,
)
from randcorr_hub.core.exceptions import (
    AsymmetricMatrixError,
    InconsistentResultError,
    InvalidParameterError,
    RankMismatchError,
    SizeGuardError,
)
from randcorr_hub.core.models import (
    DensityMatrix,
    PureState,
    QuantumState,
    SystemShape,
)
from randcorr_hub.core.opbasis import gell_mann_basis
from randcorr_hub.core.sampling import SeedLike, haar_unitaries, stream_rng
from randcorr_hub.core.statekit import purity, w_family
from randcorr_hub.infra.settings import settings
from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)

SYMMETRY_TOLERANCE = 1e-8
CONSISTENCY_TOLERANCE = 1e-8
ORACLE_MAX_RANK = 4
ORACLE_MAX_QUBITS = 4
NEGATIVE_W_TOLERANCE = 1e-12


class SupportBasis:
    """
    Ортонормированные собственные векторы ρ с собственными значениями > cutoff
    """

    def __init__(self, shape: SystemShape, vectors: np.ndarray,
                 eigenvalues: np.ndarray, cutoff: float):
        vectors = np.asarray(vectors, dtype=np.complex128)
        if vectors.ndim != 2 or vectors.shape[0] != shape.total_dim:
            raise InvalidParameterError("vectors", vectors.shape,
                                        "ожидался массив (D, m)")
        gram = vectors.conj().T @ vectors
        if np.max(np.abs(gram - np.eye(vectors.shape[1]))) > 1e-10:
            raise InvalidParameterError("vectors", "gram",
                                        "векторы носителя не ортонормированы")
        vectors.setflags(write=False)
        self._shape = shape
        self._vectors = vectors
        self._eigenvalues = np.asarray(eigenvalues, dtype=float)
        self._cutoff = cutoff

    @property
    def shape(self) -> SystemShape:
        return self._shape

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigenvalues

    @property
    def cutoff(self) -> float:
        return self._cutoff

    @property
    def rank(self) -> int:
        return int(self._vectors.shape[1])

    def project(self, operator: np.ndarray) -> np.ndarray:
        """V† O V"""
        return self._vectors.conj().T @ operator @ self._vectors

    def __repr__(self) -> str:
        return f"SupportBasis(rank={self.rank}, cutoff={self._cutoff:g})"


class ConvexRoofContext:
    """
    S̃ = (1/m²)[s0 I⊗I + s·σ⊗I + I⊗s·σ + Σ W_ij σ_i⊗σ_j] и вектор Блоха
    ρ̃ = (I + ρ·σ)/m
    """

    def __init__(self, m: int, s0: float, s_vec: np.ndarray, w_matrix: np.ndarray,
                 rho_bloch: Optional[np.ndarray] = None):
        w_matrix = np.asarray(w_matrix, dtype=float)
        if np.max(np.abs(w_matrix - w_matrix.T), initial=0.0) > 1e-10:
            deviation = float(np.max(np.abs(w_matrix - w_matrix.T)))
            raise AsymmetricMatrixError("W", deviation)
        self.m = m
        self.s0 = float(s0)
        self.s_vec = np.asarray(s_vec, dtype=float)
        self.w_matrix = w_matrix
        if w_matrix.size:
            eigenvalues, eigenvectors = np.linalg.eigh(w_matrix)
            order = np.argsort(eigenvalues)[::-1]
            self.w_eigenvalues = eigenvalues[order]
            self.w_eigenvectors = eigenvectors[:, order]
            self.w_min = float(self.w_eigenvalues[-1])
        else:
            self.w_eigenvalues = np.zeros(0)
            self.w_eigenvectors = np.zeros((0, 0))
            self.w_min = 0.0
        self.rho_bloch = (None if rho_bloch is None
                          else np.asarray(rho_bloch, dtype=float))

    def reconstruct(self) -> np.ndarray:
        """Собирает S̃ обратно из (s0, s, W)"""
        m = self.m
        if m == 1:
            return np.array([[self.s0]], dtype=np.complex128)
        sigma = gell_mann_basis(m).elements
        identity = np.eye(m)
        result = self.s0 * np.kron(identity, identity)
        for i, s_i in enumerate(self.s_vec):
            result = result + s_i * (np.kron(sigma[i], identity)
                                     + np.kron(identity, sigma[i]))
        result = result + np.einsum('ij,iab,jcd->acbd', self.w_matrix, sigma,
                                    sigma).reshape(m * m, m * m)
        return result / (m * m)

    def length(self) -> float:
        """C(ρ) = (1/m²)[s0 + 2 s·ρ + ρᵀ W ρ]"""
        r = self._bloch()
        return float((self.s0 + 2.0 * self.s_vec @ r + r @ self.w_matrix @ r)
                     / self.m ** 2)

    def purity(self) -> float:
        """Tr ρ² = (1 + |ρ|²)/m"""
        r = self._bloch()
        return float((1.0 + r @ r) / self.m)

    def rotated_bloch(self) -> np.ndarray:
        """Вектор Блоха в собственном базисе W (w_1 ≥ w_2 ≥ ...)"""
        return self.w_eigenvectors.T @ self._bloch()

    def _bloch(self) -> np.ndarray:
        if self.rho_bloch is None:
            raise InvalidParameterError("rho_bloch", None, "вектор Блоха не задан")
        return self.rho_bloch

    def to_dict(self) -> Dict:
        return {
            "m": self.m,
            "s0": self.s0,
            "s_vec": self.s_vec.tolist(),
            "W": self.w_matrix.tolist(),
            "w_eigenvalues": self.w_eigenvalues.tolist(),
            "w_min": self.w_min,
            "rho_bloch": None if self.rho_bloch is None else self.rho_bloch.tolist(),
        }


class PureDecomposition:
    """Разложение ρ = Σ μ_k |Ψ_k⟩⟨Ψ_k|"""

    def __init__(self, weights: Sequence[float], states: Sequence[PureState]):
        weights = np.asarray(weights, dtype=float)
        if len(weights) != len(states) or len(states) == 0:
            raise InvalidParameterError("states", len(states),
                                        "число весов и состояний не совпадает")
        if np.any(weights <= 0.0):
            raise InvalidParameterError("weights", weights.tolist(),
                                        "веса должны быть положительными")
        if abs(weights.sum() - 1.0) > 1e-8:
            raise InvalidParameterError("weights", float(weights.sum()),
                                        "сумма весов должна быть равна 1")
        self.weights = weights
        self.states = list(states)

    def density_matrix(self) -> np.ndarray:
        return sum(mu * psi.projector() for mu, psi in zip(self.weights, self.states))

    def reproduces(self, rho: DensityMatrix, tol: float = 1e-8) -> bool:
        return bool(np.max(np.abs(self.density_matrix() - rho.matrix)) <= tol)

    def average_length(self) -> float:
        return float(math.fsum(mu * length_of_correlations(psi)
                               for mu, psi in zip(self.weights, self.states)))

    def __len__(self) -> int:
        return len(self.states)


def support_basis(rho: QuantumState, tol: Optional[float] = None) -> SupportBasis:
    """
    Собственные векторы ρ с собственными значениями > tol (по убыванию)

    Raises:
        RankMismatchError: если носитель пуст
    """
    tol = settings.get("rank_tolerance", 1e-10) if tol is None else tol
    matrix = rho.to_density_matrix().matrix
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    keep = eigenvalues > tol
    if not np.any(keep):
        raise RankMismatchError("> 0", 0)
    order = np.argsort(eigenvalues[keep])[::-1]
    return SupportBasis(rho.shape, eigenvectors[:, keep][:, order],
                        eigenvalues[keep][order], tol)


def projected_s_tilde(support: SupportBasis) -> np.ndarray:
    """
    S̃_{(ij),(kl)} = Σ_P ⟨ĩ|P†|k̃⟩⟨j̃|P|l̃⟩ по всем строкам полного веса;
    оператор S размерности D² не строится

    Raises:
        SizeGuardError: если D > 2^max_two_copy_qubits
    """
    shape = support.shape
    limit = settings.get("max_two_copy_qubits", 8)
    if shape.total_dim > 2 ** limit:
        raise SizeGuardError("размерности носителя", 2 ** limit, shape.total_dim)
    m = support.rank
    stacks = adjoint_stacks(resolve_bases(shape, None), full_block_only=True)
    vectors = support.vectors
    tensor = vectors.reshape(shape.local_dims + (m,))
    bra = vectors.conj().T
    accumulator = np.zeros((m * m, m * m), dtype=np.complex128)

    def leaf(_index, image):
        nonlocal accumulator
        block = bra @ image.reshape(shape.total_dim, m)
        accumulator = accumulator + np.kron(block, block.conj().T)

    walk_operator_strings(tensor, stacks, leaf)
    return accumulator


def bloch_decompose(s_tilde: np.ndarray, m: int,
                    rho_tilde: Optional[np.ndarray] = None) -> ConvexRoofContext:
    """
    Коэффициенты s0, s, W разложения S̃ по σ_μ ⊗ σ_ν (Гелл-Манн, размерность m)

    Raises:
        AsymmetricMatrixError: если W или s несимметричны сильнее 1e-8
    """
    s_tilde = np.asarray(s_tilde, dtype=np.complex128)
    if s_tilde.shape != (m * m, m * m):
        raise InvalidParameterError("s_tilde", s_tilde.shape,
                                    f"ожидалась матрица {m * m}x{m * m}")
    hermiticity = float(np.max(np.abs(s_tilde - s_tilde.conj().T)))
    if hermiticity > SYMMETRY_TOLERANCE:
        raise AsymmetricMatrixError("S̃ (эрмитовость)", hermiticity)
    if m == 1:
        s0 = float(s_tilde[0, 0].real)
        return ConvexRoofContext(1, s0, np.zeros(0), np.zeros((0, 0)),
                                 None if rho_tilde is None else np.zeros(0))

    full = gell_mann_basis(m).full_stack()
    reshaped = s_tilde.reshape(m, m, m, m)
    # c_{μν} = Tr(S̃ σ_μ⊗σ_ν)
    coefficients = np.einsum('ajbk,mba,nkj->mn', reshaped, full, full)
    if np.max(np.abs(coefficients.imag)) > SYMMETRY_TOLERANCE:
        raise AsymmetricMatrixError("коэффициенты S̃ (мнимая часть)",
                                    float(np.max(np.abs(coefficients.imag))))
    coefficients = coefficients.real
    left = coefficients[1:, 0]
    right = coefficients[0, 1:]
    w_raw = coefficients[1:, 1:]
    deviation = max(float(np.max(np.abs(w_raw - w_raw.T))),
                    float(np.max(np.abs(left - right))))
    if deviation > SYMMETRY_TOLERANCE:
        raise AsymmetricMatrixError("W", deviation)

    rho_bloch = None
    if rho_tilde is not None:
        rho_bloch = np.einsum('iab,ba->i', full[1:], rho_tilde).real
    return ConvexRoofContext(m, coefficients[0, 0], (left + right) / 2.0,
                             (w_raw + w_raw.T) / 2.0, rho_bloch)


def roof_context(rho: QuantumState, tol: Optional[float] = None) -> ConvexRoofContext:
    """Носитель, S̃ и разложение Блоха для состояния"""
    support = support_basis(rho, tol)
    s_tilde = projected_s_tilde(support)
    rho_tilde = support.project(rho.to_density_matrix().matrix)
    return bloch_decompose(s_tilde, support.rank, rho_tilde)


def rank2_closed_form(context: ConvexRoofContext) -> float:
    """¼[s0 + 2 s·ρ + w3 + (w1 - w3)ρ'_1² + (w2 - w3)ρ'_2²]"""
    w1, w2, w3 = context.w_eigenvalues
    rotated = context.rotated_bloch()
    return float((context.s0 + 2.0 * context.s_vec @ context.rho_bloch + w3
                  + (w1 - w3) * rotated[0] ** 2 + (w2 - w3) * rotated[1] ** 2) / 4.0)


def convex_roof_rank2(rho: QuantumState, tol: Optional[float] = None) -> float:
    """
    E(ρ) = C(ρ) + ½(1 - Tr ρ²) w_min для ρ ранга 2

    Raises:
        RankMismatchError: если ранг не равен 2
        InconsistentResultError: если две формы E расходятся больше 1e-8
    """
    context = roof_context(rho, tol)
    if context.m != 2:
        raise RankMismatchError("2", context.m)
    value = context.length() + 0.5 * (1.0 - context.purity()) * context.w_min
    closed = rank2_closed_form(context)
    if abs(value - closed) > CONSISTENCY_TOLERANCE:
        raise InconsistentResultError("E(ρ) ранга 2", value, closed,
                                      CONSISTENCY_TOLERANCE)
    return float(value)


def convex_roof(rho: QuantumState, tol: Optional[float] = None) -> float:
    """
    Точная выпуклая крыша: C(ψ) для ранга 1, формула ранга 2 иначе

    Raises:
        RankMismatchError: для ранга больше 2
    """
    support = support_basis(rho, tol)
    if support.rank == 1:
        vector = support.vectors[:, 0]
        return length_of_correlations(PureState.from_unnormalized(rho.shape, vector))
    if support.rank == 2:
        return convex_roof_rank2(rho, tol)
    raise RankMismatchError("1 или 2", support.rank)


def witness_rank_m(rho: QuantumState, tol: Optional[float] = None) -> Dict:
    """
    W(ρ) = C(ρ) + (w_min/m²)(1 - Tr ρ²) и вариант с множителем w_min/m

    Returns:
        Словарь {W_value, variant_values, w_min, m, C, purity, threshold,
        entangled}; порог Π(d_n - 1) равен значению на чистых произведениях
    """
    context = roof_context(rho, tol)
    threshold = entanglement_threshold(rho.shape)
    m = context.m
    length = length_of_correlations(rho)
    state_purity = purity(rho)
    if m == 1:
        value = variant = length
    else:
        mixedness = 1.0 - state_purity
        value = length + context.w_min / m ** 2 * mixedness
        variant = length + context.w_min / m * mixedness
    if context.w_min < -NEGATIVE_W_TOLERANCE and m > 1:
        logger.warning(
            f"w_min = {context.w_min:.6g} < 0 при m = {m}: "
            f"W = {value:.10g}, вариант w_min/m = {variant:.10g}"
        )
    return {
        "W_value": float(value),
        "variant_values": {"w_min_over_m": float(variant)},
        "w_min": context.w_min,
        "m": m,
        "C": float(length),
        "purity": float(state_purity),
        "threshold": threshold,
        "entangled": bool(value > threshold + CONSISTENCY_TOLERANCE),
    }


def roof_report(rho: QuantumState, tol: Optional[float] = None) -> Dict:
    """
    {rank, C, purity, w_min, E_or_W, variant_w_min_over_m, threshold,
    entangled_flag}
    """
    witness = witness_rank_m(rho, tol)
    if witness["m"] <= 2:
        value = convex_roof(rho, tol)
        kind = "E"
    else:
        value = witness["W_value"]
        kind = "W"
    if witness["m"] == 2 and value < witness["W_value"] - CONSISTENCY_TOLERANCE:
        logger.warning(
            f"W = {witness['W_value']:.10g} больше точного E = {value:.10g} "
            f"для ранга 2"
        )
    return {
        "rank": witness["m"],
        "C": witness["C"],
        "purity": witness["purity"],
        "w_min": witness["w_min"],
        "E_or_W": value,
        "kind": kind,
        "variant_w_min_over_m": witness["variant_values"]["w_min_over_m"],
        "threshold": witness["threshold"],
        "entangled_flag": bool(value > witness["threshold"]
                               + CONSISTENCY_TOLERANCE),
    }


def decomposition_from_isometry(support: SupportBasis,
                                isometry: np.ndarray) -> PureDecomposition:
    """
    ψ̃_k = Σ_i U_ik √λ_i |ĩ⟩ для изометрии U размера m x L (U U† = I)
    """
    m = support.rank
    isometry = np.asarray(isometry, dtype=np.complex128)
    if isometry.shape[0] != m or isometry.shape[1] < m:
        raise InvalidParameterError("isometry", isometry.shape,
                                    f"ожидалась матрица {m} x L, L >= {m}")
    if np.max(np.abs(isometry @ isometry.conj().T - np.eye(m))) > 1e-8:
        raise InvalidParameterError("isometry", "U U†", "строки не ортонормированы")
    amplitudes = isometry * np.sqrt(support.eigenvalues)[:, np.newaxis]
    weights, states = [], []
    for column in amplitudes.T:
        weight = float(np.vdot(column, column).real)
        if weight <= 1e-14:
            continue
        vector = support.vectors @ column
        weights.append(weight)
        states.append(PureState.from_unnormalized(support.shape, vector))
    total = math.fsum(weights)
    return PureDecomposition([w / total for w in weights], states)


class OracleResult:
    """Лучшее найденное разложение и его средняя длина корреляций"""

    def __init__(self, value: float, isometry: np.ndarray, support: SupportBasis,
                 restarts: int):
        self.value = value
        self.isometry = isometry
        self.support = support
        self.restarts = restarts

    def decomposition(self) -> PureDecomposition:
        return decomposition_from_isometry(self.support, self.isometry)


def _ensemble_average(isometry: np.ndarray, amplitudes: np.ndarray,
                      s_tilde: np.ndarray) -> float:
    """Σ_k (a_k⊗a_k)† S̃ (a_k⊗a_k) / ‖a_k‖², a_k = k-й столбец"""
    total = 0.0
    for column in (isometry * amplitudes[:, np.newaxis]).T:
        norm = float(np.vdot(column, column).real)
        if norm <= 1e-14:
            continue
        pair = np.kron(column, column)
        total += float(np.vdot(pair, s_tilde @ pair).real) / norm
    return total


def _isometry(base: np.ndarray, params: np.ndarray, m: int) -> np.ndarray:
    size = base.shape[0]
    h = params[:size * size].reshape(size, size)
    hermitian = np.triu(h) + np.triu(h, 1).T + 1j * (np.tril(h, -1) - np.tril(h, -1).T)
    return (base @ expm(1j * hermitian))[:m]


def convex_roof_search(rho: QuantumState, restarts: Optional[int] = None,
                       ensemble_size: Optional[int] = None, seed: SeedLike = None,
                       workers: Optional[int] = None,
                       tol: Optional[float] = None) -> OracleResult:
    """
    Локальная минимизация Σ μ_k C(Ψ_k) по изометриям U = (U_0 e^{iH})[:m]
    со случайными перезапусками

    Raises:
        SizeGuardError: если m > 4 или N > 4 кубитов
    """
    support = support_basis(rho, tol)
    m = support.rank
    if m > ORACLE_MAX_RANK:
        raise SizeGuardError("ранга для перебора разложений", ORACLE_MAX_RANK, m)
    if rho.shape.total_dim > 2 ** ORACLE_MAX_QUBITS:
        raise SizeGuardError("размерности для перебора разложений",
                             2 ** ORACLE_MAX_QUBITS, rho.shape.total_dim)
    s_tilde = projected_s_tilde(support)
    if m == 1:
        return OracleResult(float(s_tilde[0, 0].real), np.eye(1), support, 0)

    restarts = settings.get("oracle_restarts", 32) if restarts is None else restarts
    size = 2 * m if ensemble_size is None else ensemble_size
    if size < m:
        raise InvalidParameterError("ensemble_size", size, f"L должно быть >= {m}")
    workers = settings.get("workers", 1) if workers is None else workers
    amplitudes = np.sqrt(support.eigenvalues)

    def attempt(index: int):
        rng = stream_rng(seed, index)
        base = haar_unitaries(size, 1, rng)[0]

        def objective(params):
            return _ensemble_average(_isometry(base, params, m), amplitudes, s_tilde)

        start = 0.1 * rng.standard_normal(size * size)
        result = minimize(objective, start, method="BFGS")
        return float(result.fun), _isometry(base, result.x, m)

    if workers <= 1:
        outcomes = [attempt(i) for i in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(attempt, range(restarts)))
    best_value, best_isometry = min(outcomes, key=lambda item: item[0])
    logger.info(f"Перебор разложений: m={m}, L={size}, restarts={restarts}, "
                f"E <= {best_value:.10g}")
    return OracleResult(best_value, best_isometry, support, restarts)


def convex_roof_oracle(rho: QuantumState, restarts: Optional[int] = None,
                       ensemble_size: Optional[int] = None,
                       seed: SeedLike = None) -> float:
    """Верхняя оценка E(ρ) численным перебором разложений"""
    return convex_roof_search(rho, restarts, ensemble_size, seed).value


def w_family_sweep(p_values: Sequence[float]) -> List[Dict]:
    """(p, W(ρ), C(ρ), Tr ρ²) для семейства (1-p)|W⟩⟨W| + p ρ_n"""
    rows = []
    for p in p_values:
        witness = witness_rank_m(w_family(float(p)))
        rows.append({
            "p": float(p),
            "W": witness["W_value"],
            "W_variant": witness["variant_values"]["w_min_over_m"],
            "C": witness["C"],
            "purity": witness["purity"],
            "rank": witness["m"],
            "detected": witness["entangled"],
        })
    return rows
