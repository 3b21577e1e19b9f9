"""
Случайные корреляции R: точное значение C/(d²-1)^N, оценки Монте-Карло
по направлениям на сфере (кубиты) и унитарным матрицам Хаара (кудиты),
моделирование конечного числа измерений, калибровка свидетеля
R_K > 1/3^N + δ и вероятность обнаружения запутанности.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from randcorr_hub.core.correlations import expectation, length_of_correlations
from randcorr_hub.core.exceptions import (
    CalibrationError,
    DimensionMismatchError,
    InconsistentResultError,
    InvalidOperatorError,
    InvalidParameterError,
    InvalidStateError,
)
from randcorr_hub.core.kernels import apply_local_batch, expectation_batch
from randcorr_hub.core.models import PureState, QuantumState, SystemShape
from randcorr_hub.core.opbasis import PAULI_X, PAULI_Y, PAULI_Z, gell_mann_basis
from randcorr_hub.core.sampling import (
    SeedLike,
    haar_unitaries,
    make_rng,
    stream_rng,
    uniform_directions,
)
from randcorr_hub.core.statekit import ghz
from randcorr_hub.infra.settings import settings
from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)

SETTING_TOLERANCE = 1e-10
OPERATOR_TOLERANCE = 1e-8

# номера независимых серий случайных чисел
MC_STREAM = 0
CALIBRATION_STREAM = 1
DETECTION_STREAM = 2
TWIRL_STREAM = 3

# вероятности обнаружения GHZ_N одной случайной настройкой, доверие 95.4%
PUBLISHED_DETECTION: Dict[Optional[int], Dict[int, float]] = {
    1000: {3: 0.26, 4: 0.44, 5: 0.47, 6: 0.57, 7: 0.52, 8: 0.48, 9: 0.41, 10: 0.34},
    None: {3: 0.26, 4: 0.44, 5: 0.48, 6: 0.63, 7: 0.67, 8: 0.77, 9: 0.80, 10: 0.86},
}

PAULI_STACK = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


def shots_label(shots: Optional[int]) -> str:
    return "inf" if shots is None else str(shots)


def normalize_shots(shots) -> Optional[int]:
    """None, math.inf или "inf" означают бесконечное число измерений"""
    if shots is None:
        return None
    if isinstance(shots, str):
        if shots.strip().lower() in ("inf", "infinity", "∞"):
            return None
        try:
            shots = int(shots)
        except ValueError:
            raise InvalidParameterError("shots", shots,
                                        "K должно быть целым >= 1 или ∞")
    if isinstance(shots, float) and math.isinf(shots):
        return None
    if int(shots) != shots or shots < 1:
        raise InvalidParameterError("shots", shots, "K должно быть целым >= 1 или ∞")
    return int(shots)


class SettingSample:
    """
    Одна случайная настройка: единичный вектор (кубит) или унитарная
    матрица на каждую частицу
    """

    def __init__(self, kind: str, values: np.ndarray, seed: SeedLike = None,
                 index: int = 0):
        values = np.asarray(values)
        if kind == "direction":
            if values.ndim != 2 or values.shape[1] != 3:
                raise InvalidParameterError("values", values.shape,
                                            "нужен массив (N, 3)")
            norms = np.linalg.norm(values, axis=1)
            if np.max(np.abs(norms - 1.0)) > SETTING_TOLERANCE:
                raise InvalidParameterError("values", norms.tolist(),
                                            "направления должны быть единичными")
        elif kind == "unitary":
            if values.ndim != 3 or values.shape[1] != values.shape[2]:
                raise InvalidParameterError("values", values.shape,
                                            "нужен массив (N, d, d)")
            identity = np.eye(values.shape[1])
            products = values @ values.conj().transpose(0, 2, 1)
            if np.max(np.abs(products - identity)) > SETTING_TOLERANCE:
                raise InvalidParameterError("values", kind,
                                            "матрицы не унитарны")
        else:
            raise InvalidParameterError("kind", kind,
                                        "ожидалось 'direction' или 'unitary'")
        values = values.copy()
        values.setflags(write=False)
        self._kind = kind
        self._values = values
        self.seed = seed
        self.index = index

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def party_count(self) -> int:
        return int(self._values.shape[0])

    def operators(self, initial_operator: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Локальные наблюдаемые: u·σ для направлений, U† λ U для унитарных
        """
        if self._kind == "direction":
            return np.einsum('nk,kab->nab', self._values, PAULI_STACK)
        d = self._values.shape[1]
        op = (default_initial_operator(d) if initial_operator is None
              else initial_operator)
        return self._values.conj().transpose(0, 2, 1) @ op @ self._values

    def __repr__(self) -> str:
        return f"SettingSample(kind={self._kind}, N={self.party_count})"


class WitnessConfig:
    """Параметры свидетеля R_K > 1/3^N + δ (одна настройка на частицу)"""

    def __init__(self, n: int, shots=None, confidence: Optional[float] = None,
                 delta: Optional[float] = None,
                 calibration_trials: Optional[int] = None,
                 settings_per_party: int = 1):
        if n < 1:
            raise InvalidParameterError("n", n, "число кубитов должно быть >= 1")
        confidence = (settings.get("default_confidence", 0.954)
                      if confidence is None else confidence)
        if not 0.0 < confidence < 1.0:
            raise InvalidParameterError("confidence", confidence,
                                        "уровень доверия должен быть в (0, 1)")
        if delta is not None and delta < 0:
            raise InvalidParameterError("delta", delta, "δ должно быть >= 0")
        if settings_per_party != 1:
            raise InvalidParameterError("settings_per_party", settings_per_party,
                                        "поддерживается только M = 1")
        self.n = n
        self.shots = normalize_shots(shots)
        self.confidence = confidence
        self.delta = delta
        self.calibration_trials = (settings.get("calibration_trials", 1_000_000)
                                   if calibration_trials is None
                                   else calibration_trials)
        self.settings_per_party = settings_per_party

    @property
    def product_level(self) -> float:
        return 1.0 / 3 ** self.n

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "shots": shots_label(self.shots),
            "confidence": self.confidence,
            "delta": self.delta,
            "calibration_trials": self.calibration_trials,
            "settings_per_party": self.settings_per_party,
        }


class WitnessReport:
    """Оценка вероятности обнаружения с биномиальной ошибкой"""

    def __init__(self, probability: float, stderr: float, delta: float,
                 bound: float, trials: int, config: WitnessConfig):
        if not 0.0 <= probability <= 1.0:
            raise InvalidParameterError("probability", probability,
                                        "вероятность вне [0, 1]")
        self.probability = probability
        self.stderr = max(stderr, 0.0)
        self.delta = delta
        self.bound = bound
        self.trials = trials
        self.config = config

    def to_dict(self) -> Dict:
        return {
            "probability": self.probability,
            "stderr": self.stderr,
            "delta": self.delta,
            "bound": self.bound,
            "trials": self.trials,
            **{f"config_{k}": v for k, v in self.config.to_dict().items()},
        }

    def __repr__(self) -> str:
        return (f"WitnessReport(p={self.probability:.4f} ± {self.stderr:.4f}, "
                f"bound={self.bound:.5f})")


class MonteCarloEstimate:
    """Среднее и стандартная ошибка выборки"""

    def __init__(self, estimate: float, stderr: float, samples: int, method: str):
        self.estimate = estimate
        self.stderr = stderr
        self.samples = samples
        self.method = method

    def to_dict(self) -> Dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "samples": self.samples,
            "method": self.method,
        }

    def __repr__(self) -> str:
        return f"MonteCarloEstimate({self.estimate:.6g} ± {self.stderr:.2g})"


def default_initial_operator(d: int) -> np.ndarray:
    """Диагональная матрица Гелл-Манна λ_{d-1} (σ_z для кубита)"""
    return gell_mann_basis(d).elements[-1]


def validate_initial_operator(operator: np.ndarray, d: int) -> np.ndarray:
    """
    Проверяет Tr λ = 0 и Tr(λλ†) = d с точностью 1e-8
    """
    op = np.asarray(operator, dtype=np.complex128)
    if op.shape != (d, d):
        raise InvalidOperatorError(f"ожидалась матрица {d}x{d}, получено {op.shape}")
    trace = np.trace(op)
    if abs(trace) > OPERATOR_TOLERANCE:
        raise InvalidOperatorError(f"след оператора {trace:.3e} не равен нулю")
    norm = np.trace(op @ op.conj().T).real
    if abs(norm - d) > OPERATOR_TOLERANCE:
        raise InvalidOperatorError(f"Tr(λλ†) = {norm:.10g}, ожидалось {d}")
    return op


def sample_direction(seed: SeedLike = None) -> np.ndarray:
    """Равномерное направление на единичной сфере"""
    return uniform_directions(1, make_rng(seed))[0]


def sample_haar_unitary(d: int, seed: SeedLike = None) -> np.ndarray:
    """Унитарная матрица d x d с мерой Хаара"""
    if d < 2:
        raise InvalidParameterError("d", d, "размерность должна быть >= 2")
    return haar_unitaries(d, 1, make_rng(seed))[0]


def sample_setting(shape: SystemShape, rng: np.random.Generator,
                   method: str = "sphere", index: int = 0) -> SettingSample:
    """Случайная настройка для всех частиц"""
    n = shape.party_count
    if method == "sphere":
        if not shape.is_qubit:
            raise InvalidStateError("сфера направлений определена для кубитов")
        return SettingSample("direction", uniform_directions(n, rng), index=index)
    return SettingSample("unitary", haar_unitaries(shape.uniform_dim(), n, rng),
                         index=index)


def direction_operators(directions: np.ndarray) -> np.ndarray:
    """u·σ для массива направлений (..., 3) -> (..., 2, 2)"""
    return np.einsum('...k,kab->...ab', directions, PAULI_STACK)


def batch_expectations(state: QuantumState, local_operators: np.ndarray) -> np.ndarray:
    """
    E_b = Tr(ρ ⊗_n O_{b,n}) для пакета настроек

    Args:
        state: Чистое или смешанное состояние
        local_operators: Массив (B, N, d, d)

    Returns:
        Комплексный массив длины B
    """
    shape = state.shape
    ops = np.asarray(local_operators, dtype=np.complex128)
    expected = (shape.party_count,)
    if ops.ndim != 4 or ops.shape[1:2] != expected:
        raise DimensionMismatchError(expected, ops.shape[1:2], "числа операторов")
    batch = ops.shape[0]
    base = state.tensor()
    images = np.broadcast_to(base, (batch,) + base.shape)
    for party in range(shape.party_count):
        images = apply_local_batch(images, ops[:, party], party)
    if isinstance(state, PureState):
        return expectation_batch(base, images)
    dim = shape.total_dim
    return np.trace(images.reshape(batch, dim, dim), axis1=1, axis2=2)


def exact_random_correlations(state: QuantumState) -> float:
    """R = C / (d² - 1)^N"""
    shape = state.shape
    if not shape.is_uniform:
        raise InvalidStateError("нужна одинаковая локальная размерность")
    d = shape.uniform_dim()
    return length_of_correlations(state) / (d * d - 1) ** shape.party_count


def _chunks(total: int, chunk_size: int) -> List[int]:
    sizes = [chunk_size] * (total // chunk_size)
    if total % chunk_size:
        sizes.append(total % chunk_size)
    return sizes


def _run_chunks(task: Callable[[int, int], np.ndarray], total: int,
                workers: Optional[int] = None,
                chunk_size: Optional[int] = None) -> np.ndarray:
    """
    Выполняет task(номер блока, размер блока) и склеивает результаты
    в порядке номеров блоков
    """
    chunk_size = settings.get("chunk_size", 4096) if chunk_size is None else chunk_size
    workers = settings.get("workers", 1) if workers is None else workers
    sizes = _chunks(total, chunk_size)
    if workers <= 1 or len(sizes) <= 1:
        parts = [task(i, size) for i, size in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(task, range(len(sizes)), sizes))
    return np.concatenate(parts) if parts else np.zeros(0)


def mc_random_correlations(state: QuantumState, samples: int,
                           initial_operator: Optional[np.ndarray] = None,
                           seed: SeedLike = None, method: str = "haar",
                           workers: Optional[int] = None) -> MonteCarloEstimate:
    """
    Оценка R как среднего |E|² по независимым случайным настройкам

    Args:
        state: Состояние с одинаковой локальной размерностью
        samples: Число случайных настроек
        initial_operator: λ с Tr λ = 0, Tr(λλ†) = d (только для method="haar")
        seed: Зерно
        method: "haar" (U_n† λ U_n) или "sphere" (u_n·σ, только кубиты)
        workers: Число потоков

    Returns:
        MonteCarloEstimate
    """
    shape = state.shape
    if samples < 2:
        raise InvalidParameterError("samples", samples, "нужно хотя бы 2 испытания")
    if not shape.is_uniform:
        raise InvalidStateError("нужна одинаковая локальная размерность")
    d = shape.uniform_dim()
    n = shape.party_count

    if method == "sphere":
        if not shape.is_qubit:
            raise InvalidStateError("сфера направлений определена для кубитов")
        if initial_operator is not None:
            raise InvalidParameterError("initial_operator", "задан",
                                        "для method='sphere' не используется")
        operator = None
    elif method == "haar":
        operator = validate_initial_operator(
            default_initial_operator(d) if initial_operator is None
            else initial_operator, d)
    else:
        raise InvalidParameterError("method", method, "ожидалось 'haar' или 'sphere'")

    logger.debug(f"MC R: method={method}, N={n}, d={d}, samples={samples}")

    def task(chunk: int, size: int) -> np.ndarray:
        rng = stream_rng(seed, MC_STREAM, chunk)
        if operator is None:
            ops = direction_operators(uniform_directions(size * n, rng)
                                      .reshape(size, n, 3))
        else:
            unitaries = haar_unitaries(d, size * n, rng).reshape(size, n, d, d)
            ops = unitaries.conj().swapaxes(-1, -2) @ operator @ unitaries
        values = batch_expectations(state, ops)
        return np.abs(values) ** 2

    values = _run_chunks(task, samples, workers)
    estimate = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(samples))
    logger.info(f"MC R ({method}): {estimate:.6g} ± {stderr:.2g}")
    return MonteCarloEstimate(estimate, stderr, samples, method)


def shot_estimates(values: np.ndarray, shots: Optional[int],
                   rng: np.random.Generator) -> np.ndarray:
    """
    Ê = 2·Binomial(K, (1+E)/2)/K - 1 для каждого E; при K = ∞ возвращает E
    """
    values = np.asarray(values, dtype=float)
    if np.any(np.abs(values) > 1.0 + 1e-9):
        worst = float(np.max(np.abs(values)))
        raise InconsistentResultError("|E|", worst, 1.0, 1e-9)
    if shots is None:
        return values
    probabilities = np.clip((1.0 + values) / 2.0, 0.0, 1.0)
    return 2.0 * rng.binomial(shots, probabilities) / shots - 1.0


def simulate_shot_estimate(state: QuantumState, setting: SettingSample,
                           shots=None, seed: SeedLike = None) -> float:
    """
    Выборочное среднее K произведений исходов ±1 при настройке setting
    """
    if not state.shape.is_qubit:
        raise InvalidStateError("моделирование измерений определено для кубитов")
    if setting.party_count != state.shape.party_count:
        raise DimensionMismatchError([state.shape.party_count],
                                     [setting.party_count], "числа настроек")
    value = expectation(state, list(setting.operators())).real
    estimate = shot_estimates(np.array([value]), normalize_shots(shots),
                              make_rng(seed))
    return float(estimate[0])


def required_calibration_trials(confidence: float) -> int:
    return int(math.ceil(100.0 / (1.0 - confidence) - 1e-9))


def product_estimates(n: int, shots: Optional[int], trials: int,
                      seed: SeedLike, stream: int = CALIBRATION_STREAM,
                      workers: Optional[int] = None) -> np.ndarray:
    """
    R̂_K = Ê² для |0...0⟩ при случайных направлениях: E = Π_n u_{n,z}
    """

    def task(chunk: int, size: int) -> np.ndarray:
        rng = stream_rng(seed, stream, chunk)
        directions = uniform_directions(size * n, rng).reshape(size, n, 3)
        values = np.prod(directions[:, :, 2], axis=1)
        return shot_estimates(values, shots, rng) ** 2

    return _run_chunks(task, trials, workers)


def calibrate_delta(n: int, shots=None, confidence: Optional[float] = None,
                    trials: Optional[int] = None, seed: SeedLike = None,
                    workers: Optional[int] = None) -> float:
    """
    δ = (квантиль уровня confidence распределения R̂_K для |0...0⟩) - 1/3^N,
    не меньше нуля

    Raises:
        CalibrationError: если trials < 100/(1 - confidence)
    """
    config = WitnessConfig(n, shots, confidence, calibration_trials=trials)
    required = required_calibration_trials(config.confidence)
    if config.calibration_trials < required:
        raise CalibrationError(config.calibration_trials, required)
    values = product_estimates(n, config.shots, config.calibration_trials, seed,
                               workers=workers)
    quantile = float(np.quantile(values, config.confidence))
    delta = max(quantile - config.product_level, 0.0)
    logger.info(
        f"Калибровка: N={n}, K={shots_label(config.shots)}, "
        f"quantile={quantile:.6g}, δ={delta:.6g}"
    )
    return delta


def detection_probability(state: QuantumState, config: WitnessConfig,
                          trials: Optional[int] = None, seed: SeedLike = None,
                          workers: Optional[int] = None) -> WitnessReport:
    """
    Доля испытаний, в которых R̂_K(state) > 1/3^N + δ

    Если config.delta не задано, δ калибруется на |0...0⟩ по тому же seed
    в отдельной серии случайных чисел.
    """
    shape = state.shape
    if not shape.is_qubit:
        raise InvalidStateError("свидетель определён для кубитов")
    if shape.party_count != config.n:
        raise DimensionMismatchError([config.n], [shape.party_count], "числа кубитов")
    trials = settings.get("default_trials", 100_000) if trials is None else trials
    if trials < 1:
        raise InvalidParameterError("trials", trials, "нужно хотя бы одно испытание")

    delta = config.delta
    if delta is None:
        delta = calibrate_delta(config.n, config.shots, config.confidence,
                                config.calibration_trials, seed, workers)
    bound = config.product_level + delta
    n = config.n

    def task(chunk: int, size: int) -> np.ndarray:
        rng = stream_rng(seed, DETECTION_STREAM, chunk)
        directions = uniform_directions(size * n, rng).reshape(size, n, 3)
        values = batch_expectations(state, direction_operators(directions)).real
        return shot_estimates(values, config.shots, rng) ** 2 > bound

    hits = _run_chunks(task, trials, workers)
    probability = float(np.count_nonzero(hits)) / trials
    stderr = math.sqrt(probability * (1.0 - probability) / trials)
    logger.info(
        f"Обнаружение: N={n}, K={shots_label(config.shots)}, "
        f"p={probability:.4f} ± {stderr:.4f}"
    )
    return WitnessReport(probability, stderr, delta, bound, trials, config)


def mc_twirl(operator: np.ndarray, d: int, samples: int, seed: SeedLike = None,
             workers: Optional[int] = None):
    """
    Среднее (U⊗U) X (U⊗U)† по мере Хаара с поэлементными ошибками

    Returns:
        (mean, stderr): две матрицы d² x d²
    """
    op = np.asarray(operator, dtype=np.complex128)
    if op.shape != (d * d, d * d):
        raise InvalidOperatorError(
            f"ожидалась матрица {d * d}x{d * d}, получено {op.shape}"
        )
    if samples < 2:
        raise InvalidParameterError("samples", samples, "нужно хотя бы 2 испытания")

    def task(chunk: int, size: int) -> np.ndarray:
        rng = stream_rng(seed, TWIRL_STREAM, chunk)
        u = haar_unitaries(d, size, rng)
        pair = np.einsum('bij,bkl->bikjl', u, u).reshape(size, d * d, d * d)
        return pair @ op @ pair.conj().swapaxes(-1, -2)

    values = _run_chunks(task, samples, workers)
    mean = values.mean(axis=0)
    spread = (np.std(values.real, axis=0, ddof=1)
              + 1j * np.std(values.imag, axis=0, ddof=1))
    return mean, spread / math.sqrt(samples)


class DetectionCell:
    """Одна ячейка таблицы вероятностей обнаружения GHZ_N"""

    def __init__(self, n: int, shots: Optional[int], report: WitnessReport,
                 published: Optional[float], tolerance_pp: float):
        self.n = n
        self.shots = shots
        self.report = report
        self.published = published
        self.tolerance_pp = tolerance_pp
        if published is None:
            self.passed = None
        else:
            self.passed = abs(report.probability - published) * 100.0 <= tolerance_pp

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "shots": shots_label(self.shots),
            "probability": self.report.probability,
            "stderr": self.report.stderr,
            "delta": self.report.delta,
            "bound": self.report.bound,
            "published": self.published,
            "tolerance_pp": self.tolerance_pp,
            "passed": self.passed,
        }


def detection_grid(n_values: Sequence[int] = tuple(range(3, 11)),
                   shots_values: Sequence = (1000, None),
                   trials: Optional[int] = None, seed: SeedLike = None,
                   confidence: Optional[float] = None,
                   calibration_trials: Optional[int] = None,
                   workers: Optional[int] = None) -> List[DetectionCell]:
    """
    Сетка вероятностей обнаружения GHZ_N для всех (K, N)

    Каждая ячейка использует собственный seed [seed, N, номер режима K].
    """
    tolerance = settings.get("detection_tolerance_pp", 4.0)
    base_seed = settings.get("default_seed") if seed is None else seed
    cells = []
    for regime, raw_shots in enumerate(shots_values):
        shots = normalize_shots(raw_shots)
        for n in n_values:
            if not 3 <= n <= 10:
                raise InvalidParameterError("n", n, "N должно быть в [3, 10]")
            config = WitnessConfig(n, shots, confidence,
                                   calibration_trials=calibration_trials)
            report = detection_probability(ghz(n), config, trials,
                                           [int(base_seed), n, regime], workers)
            published = PUBLISHED_DETECTION.get(shots, {}).get(n)
            cells.append(DetectionCell(n, shots, report, published, tolerance))
    return cells
