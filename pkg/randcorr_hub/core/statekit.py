"""
Плотные многокудитные состояния: фабрики именованных состояний,
частичный след, чистота, разложение Шмидта и мажоризация.

Частицы нумеруются с нуля; частица 0 -- старший тензорный множитель.
"""

import itertools
import json
from math import comb
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from randcorr_hub.core.exceptions import (
    InvalidParameterError,
    InvalidStateError,
    RandCorrError,
    StateFileError,
    UnknownStateError,
)
from randcorr_hub.core.kernels import apply_local
from randcorr_hub.core.models import (
    STATE_TOLERANCE,
    BlochVector,
    DensityMatrix,
    PureState,
    QuantumState,
    SchmidtSpectrum,
    SystemShape,
)
from randcorr_hub.core.opbasis import PAULI_X, PAULI_Y, PAULI_Z
from randcorr_hub.core.sampling import haar_unitaries
from randcorr_hub.infra.storage import storage
from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)

CZ_DIAGONAL = np.array([1, 1, 1, -1], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def tensor_product(states: Sequence[PureState]) -> PureState:
    """
    Тензорное произведение чистых состояний в порядке частиц
    """
    if not states:
        raise InvalidParameterError("states", [], "нужно хотя бы одно состояние")
    amplitudes = states[0].amplitudes
    dims = list(states[0].shape.local_dims)
    for state in states[1:]:
        amplitudes = np.kron(amplitudes, state.amplitudes)
        dims.extend(state.shape.local_dims)
    return PureState(SystemShape(dims), amplitudes)


def to_density_matrix(state: QuantumState) -> DensityMatrix:
    return state.to_density_matrix()


def _check_parties(shape: SystemShape, parties: Iterable[int], name: str) -> List[int]:
    chosen = sorted(set(int(p) for p in parties))
    if not chosen:
        raise InvalidParameterError(name, chosen, "пустой набор частиц")
    if chosen[0] < 0 or chosen[-1] >= shape.party_count:
        raise InvalidParameterError(
            name, chosen, f"индексы частиц должны быть в [0, {shape.party_count})"
        )
    return chosen


def partial_trace(state: QuantumState, keep: Iterable[int]) -> DensityMatrix:
    """
    Редуцированное состояние на частицах keep

    Args:
        state: Чистое или смешанное состояние
        keep: Номера оставляемых частиц (с нуля)

    Returns:
        Матрица плотности на оставленных частицах (в исходном порядке)
    """
    shape = state.shape
    kept = _check_parties(shape, keep, "keep")
    traced = [p for p in range(shape.party_count) if p not in kept]
    dims = shape.local_dims
    kept_dim = int(np.prod([dims[p] for p in kept]))
    traced_dim = int(np.prod([dims[p] for p in traced])) if traced else 1

    if isinstance(state, PureState):
        matrix = np.transpose(state.tensor(), kept + traced).reshape(
            kept_dim, traced_dim)
        reduced = matrix @ matrix.conj().T
    else:
        n = shape.party_count
        perm = kept + traced + [n + p for p in kept] + [n + p for p in traced]
        blocks = np.transpose(state.tensor(), perm).reshape(
            kept_dim, traced_dim, kept_dim, traced_dim)
        reduced = np.trace(blocks, axis1=1, axis2=3)
    reduced = (reduced + reduced.conj().T) / 2
    return DensityMatrix(shape.subshape(kept), reduced)


def purity(state: QuantumState) -> float:
    """Tr(ρ²)"""
    if isinstance(state, PureState):
        return 1.0
    return float(np.sum(np.abs(state.matrix) ** 2))


def schmidt_spectrum(psi: PureState, bipartition: Iterable[int]) -> SchmidtSpectrum:
    """
    Вероятности Шмидта для разбиения bipartition | остальные частицы
    """
    shape = psi.shape
    side = _check_parties(shape, bipartition, "bipartition")
    rest = [p for p in range(shape.party_count) if p not in side]
    if not rest:
        raise InvalidParameterError("bipartition", side,
                                    "разбиение должно быть собственным")
    dims = shape.local_dims
    rows = int(np.prod([dims[p] for p in side]))
    matrix = np.transpose(psi.tensor(), side + rest).reshape(rows, -1)
    singular = np.linalg.svd(matrix, compute_uv=False)
    probabilities = np.sort(singular ** 2)[::-1]
    return SchmidtSpectrum(probabilities / probabilities.sum())


def majorizes(p: SchmidtSpectrum, q: SchmidtSpectrum, tol: float = 1e-12) -> bool:
    """
    True, если p мажорируется q: все частичные суммы q не меньше сумм p
    """
    length = max(len(p), len(q))
    p_sums = np.cumsum(p.padded(length))
    q_sums = np.cumsum(q.padded(length))
    return bool(np.all(q_sums >= p_sums - tol))


def bipartite_length_from_schmidt(spectrum: SchmidtSpectrum, d: int) -> float:
    """
    Длина корреляций чистого двудольного состояния d x d:
    C = d² + 1 - 2d Σ p_j²
    """
    p = spectrum.probabilities
    return float(d * d + 1 - 2 * d * np.sum(p ** 2))


def measure_party(psi: PureState, party: int,
                  outcome: int) -> Tuple[float, PureState]:
    """
    Проективное измерение частицы в вычислительном базисе

    Returns:
        (вероятность исхода, нормированное состояние всей системы после
        измерения)
    """
    shape = psi.shape
    _check_parties(shape, [party], "party")
    d = shape.local_dims[party]
    if not 0 <= outcome < d:
        raise InvalidParameterError("outcome", outcome, f"исход должен быть < {d}")
    projector = np.zeros((d, d), dtype=np.complex128)
    projector[outcome, outcome] = 1.0
    collapsed = apply_local(psi.tensor(), projector, party).reshape(-1)
    probability = float(np.vdot(collapsed, collapsed).real)
    if probability < STATE_TOLERANCE:
        raise InvalidStateError(f"исход {outcome} имеет нулевую вероятность")
    return probability, PureState(shape, collapsed / np.sqrt(probability))


def apply_local_unitaries(state: QuantumState,
                          unitaries: Sequence[Optional[np.ndarray]]) -> QuantumState:
    """
    Преобразование ⊗U_n (None -- единичный оператор для частицы)
    """
    shape = state.shape
    if len(unitaries) != shape.party_count:
        raise InvalidParameterError("unitaries", len(unitaries),
                                    f"нужно {shape.party_count} операторов")
    if isinstance(state, PureState):
        tensor = state.tensor()
        for party, unitary in enumerate(unitaries):
            if unitary is not None:
                tensor = apply_local(tensor, unitary, party)
        return PureState(shape, tensor.reshape(-1))

    n = shape.party_count
    tensor = state.tensor()
    for party, unitary in enumerate(unitaries):
        if unitary is not None:
            tensor = apply_local(tensor, unitary, party)
            tensor = apply_local(tensor, np.asarray(unitary).conj(), n + party)
    matrix = tensor.reshape(shape.total_dim, shape.total_dim)
    return DensityMatrix(shape, (matrix + matrix.conj().T) / 2)


def bloch_vector(state: QuantumState, party: int) -> BlochVector:
    """Локальный вектор Блоха кубита"""
    reduced = partial_trace(state, [party]).matrix
    if reduced.shape != (2, 2):
        raise InvalidStateError("вектор Блоха определён здесь только для кубитов")
    components = [float(np.trace(reduced @ s).real)
                  for s in (PAULI_X, PAULI_Y, PAULI_Z)]
    return BlochVector(components, dim=2)


# ----------------------------------------------------------------------
# Именованные состояния
# ----------------------------------------------------------------------

def basis_state(dims: Sequence[int], indices: Sequence[int]) -> PureState:
    shape = SystemShape(dims)
    if len(indices) != shape.party_count:
        raise InvalidParameterError("indices", list(indices),
                                    "нужен индекс для каждой частицы")
    for index, d in zip(indices, shape.local_dims):
        if not 0 <= index < d:
            raise InvalidParameterError("indices", list(indices),
                                        "индекс вне локальной размерности")
    amplitudes = np.zeros(shape.total_dim, dtype=np.complex128)
    amplitudes[np.ravel_multi_index(tuple(indices), shape.local_dims)] = 1.0
    return PureState(shape, amplitudes)


def product(indices: Sequence[int], d: int = 2) -> PureState:
    """Произведение базисных состояний |i_1 i_2 ... i_N⟩"""
    return basis_state([d] * len(indices), indices)


def ghz(n: int, d: int = 2) -> PureState:
    """(|0...0⟩ + ... + |d-1...d-1⟩)/√d"""
    if n < 1:
        raise InvalidParameterError("n", n, "нужна хотя бы одна частица")
    shape = SystemShape([d] * n)
    amplitudes = np.zeros(shape.total_dim, dtype=np.complex128)
    for k in range(d):
        amplitudes[np.ravel_multi_index((k,) * n, shape.local_dims)] = 1.0
    return PureState(shape, amplitudes / np.sqrt(d))


def dicke(n: int, k: int) -> PureState:
    """Симметричное состояние Дике D^k_N: все строки веса Хэмминга k"""
    if n < 1 or not 0 <= k <= n:
        raise InvalidParameterError("k", k, f"вес должен быть в [0, {n}]")
    shape = SystemShape([2] * n)
    amplitudes = np.zeros(shape.total_dim, dtype=np.complex128)
    for ones in itertools.combinations(range(n), k):
        bits = [0] * n
        for position in ones:
            bits[position] = 1
        amplitudes[np.ravel_multi_index(tuple(bits), shape.local_dims)] = 1.0
    return PureState(shape, amplitudes / np.sqrt(comb(n, k)))


def w(n: int) -> PureState:
    return dicke(n, 1)


_BELL = {
    "phi+": (1, 0, 0, 1),
    "phi-": (1, 0, 0, -1),
    "psi+": (0, 1, 1, 0),
    "psi-": (0, 1, -1, 0),
    "singlet": (0, 1, -1, 0),
}


def bell(kind: str = "psi-") -> PureState:
    key = kind.strip().lower()
    if key not in _BELL:
        raise InvalidParameterError("kind", kind, f"допустимо: {sorted(_BELL)}")
    return PureState(SystemShape([2, 2]), np.array(_BELL[key]) / np.sqrt(2))


def singlet() -> PureState:
    return bell("psi-")


def double_singlet() -> PureState:
    return tensor_product([singlet(), singlet()])


def _controlled_superposition(zero_branch: PureState,
                              one_branch: PureState) -> PureState:
    """(|0⟩|a⟩ + |1⟩|b⟩)/√2"""
    shape = SystemShape((2,) + zero_branch.shape.local_dims)
    amplitudes = np.concatenate([zero_branch.amplitudes, one_branch.amplitudes])
    return PureState(shape, amplitudes / np.sqrt(2))


def five_qubit_counterexample() -> PureState:
    """(|0⟩|GHZ_4⟩ + |1⟩|D²_4⟩)/√2"""
    return _controlled_superposition(ghz(4), dicke(4, 2))


def locc_psi() -> PureState:
    """(|0⟩|ψ⁻⟩|ψ⁻⟩ + |1⟩|ψ⁺⟩|ψ⁺⟩)/√2"""
    return _controlled_superposition(
        tensor_product([bell("psi-"), bell("psi-")]),
        tensor_product([bell("psi+"), bell("psi+")]),
    )


def locc_phi() -> PureState:
    """|0⟩|ψ⁻⟩|ψ⁻⟩"""
    return tensor_product([product([0]), bell("psi-"), bell("psi-")])


def cluster_graph(rows: int, cols: int) -> nx.Graph:
    """
    Квадратная решётка rows x cols; узел (r, c) соответствует кубиту r*cols + c
    """
    if rows < 1 or cols < 1:
        raise InvalidParameterError("rows x cols", (rows, cols),
                                    "размеры решётки должны быть >= 1")
    grid = nx.grid_2d_graph(rows, cols)
    mapping = {(r, c): r * cols + c for r, c in grid.nodes}
    return nx.relabel_nodes(grid, mapping)


def graph_state(graph: nx.Graph) -> PureState:
    """
    |+⟩^N с controlled-Z на каждом ребре и Адамаром на каждом кубите:
    собственное состояние K_a = Z_a ⊗_{b∈N(a)} X_b, затем проверка K_a|G⟩ = |G⟩
    """
    n = graph.number_of_nodes()
    if sorted(graph.nodes) != list(range(n)):
        raise InvalidParameterError("graph", list(graph.nodes),
                                    "узлы должны быть пронумерованы 0..N-1")
    shape = SystemShape([2] * n)
    tensor = np.full(shape.local_dims, 2.0 ** (-n / 2), dtype=np.complex128)
    cz = CZ_DIAGONAL.reshape(2, 2)
    for a, b in graph.edges:
        index = [np.newaxis] * n
        index[a] = slice(None)
        index[b] = slice(None)
        factor = cz if a < b else cz.T
        tensor = tensor * factor[tuple(index)]
    for party in range(n):
        tensor = apply_local(tensor, HADAMARD, party)
    state = PureState(shape, tensor.reshape(-1))
    _verify_graph_stabilizers(state, graph)
    return state


def _verify_graph_stabilizers(state: PureState, graph: nx.Graph) -> None:
    original = state.tensor()
    for a in graph.nodes:
        image = apply_local(original, PAULI_Z, a)
        for b in graph.neighbors(a):
            image = apply_local(image, PAULI_X, b)
        deviation = float(np.max(np.abs(image - original)))
        if deviation > STATE_TOLERANCE:
            raise InvalidStateError(
                f"кластерное состояние не стабилизируется K_{a} ({deviation:.3e})"
            )


def cluster(rows: int, cols: Optional[int] = None) -> PureState:
    """Двумерное кластерное состояние на решётке rows x cols"""
    return graph_state(cluster_graph(rows, rows if cols is None else cols))


def w_family(p: float) -> DensityMatrix:
    """
    ρ = (1-p)|W⟩⟨W| + p ρ_n, ρ_n = (|100⟩⟨100| + |010⟩⟨010| + |001⟩⟨001|)/3
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("p", p, "вероятность должна быть в [0, 1]")
    w_state = w(3)
    noise = np.zeros((8, 8), dtype=np.complex128)
    for index in (4, 2, 1):
        noise[index, index] = 1.0 / 3.0
    return DensityMatrix(w_state.shape, (1 - p) * w_state.projector() + p * noise)


NAMED_STATES: Dict[str, Callable[..., QuantumState]] = {
    "ghz": ghz,
    "dicke": dicke,
    "w": w,
    "bell": bell,
    "singlet": singlet,
    "double_singlet": double_singlet,
    "five_qubit_counterexample": five_qubit_counterexample,
    "locc_psi": locc_psi,
    "locc_phi": locc_phi,
    "cluster": cluster,
    "product": product,
    "w_family": w_family,
}


def make_named_state(name: str, *args, **params) -> QuantumState:
    """
    Создаёт именованное состояние

    Args:
        name: Имя из NAMED_STATES (ghz, dicke, w, bell, double_singlet, ...)
        *args, **params: Параметры фабрики

    Returns:
        PureState или DensityMatrix

    Raises:
        UnknownStateError: если имя неизвестно
        InvalidParameterError: если параметры некорректны
    """
    key = name.strip().lower().replace("-", "_")
    factory = NAMED_STATES.get(key)
    if factory is None:
        raise UnknownStateError(name)
    try:
        return factory(*args, **params)
    except TypeError as e:
        raise InvalidParameterError(name, (args, params), str(e))


def state_from_dict(data: dict) -> QuantumState:
    """
    Состояние из JSON-словаря {"dims", "kind", "amplitudes" | "matrix"}
    """
    shape = SystemShape(data["dims"])
    kind = data.get("kind")
    if kind == "pure":
        pairs = np.asarray(data["amplitudes"], dtype=float)
        return PureState(shape, pairs[..., 0] + 1j * pairs[..., 1])
    if kind == "mixed":
        pairs = np.asarray(data["matrix"], dtype=float)
        return DensityMatrix(shape, pairs[..., 0] + 1j * pairs[..., 1])
    raise InvalidStateError(f"неизвестный вид состояния '{kind}'")


def load_state_file(path: str) -> QuantumState:
    """Читает состояние из JSON-файла"""
    try:
        data = storage.load_json(path)
        return state_from_dict(data)
    except FileNotFoundError:
        raise StateFileError(path, "файл не найден")
    except (json.JSONDecodeError, OSError) as e:
        raise StateFileError(path, str(e))
    except (KeyError, IndexError, ValueError, TypeError) as e:
        raise StateFileError(path, f"неверный формат: {e}")
    except RandCorrError as e:
        raise StateFileError(path, str(e))


def save_state_file(state: QuantumState, path: str) -> bool:
    return storage.save_json(path, state.to_dict())


# ----------------------------------------------------------------------
# Случайные состояния для проверок
# ----------------------------------------------------------------------

def random_pure_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    shape = SystemShape(dims)
    vector = (rng.standard_normal(shape.total_dim)
              + 1j * rng.standard_normal(shape.total_dim))
    return PureState.from_unnormalized(shape, vector)


def random_product_state(dims: Sequence[int],
                         rng: np.random.Generator) -> PureState:
    return tensor_product([random_pure_state([d], rng) for d in dims])


def is_fully_product(psi: PureState, tol: float = 1e-9) -> bool:
    """Состояние -- произведение, если каждый одночастичный разрез имеет ранг 1"""
    if psi.shape.party_count == 1:
        return True
    return all(schmidt_spectrum(psi, [p]).probabilities[0] > 1 - tol
               for p in range(psi.shape.party_count))


def random_entangled_state(dims: Sequence[int], rng: np.random.Generator,
                           min_gap: float = 1e-6) -> PureState:
    """
    Случайный унитарный оператор на всём пространстве, применённый к
    состоянию-произведению; спектр Шмидта проверяется
    """
    shape = SystemShape(dims)
    if shape.party_count < 2:
        raise InvalidParameterError("dims", list(dims), "нужно >= 2 частиц")
    start = random_product_state(dims, rng)
    while True:
        unitary = haar_unitaries(shape.total_dim, 1, rng)[0]
        candidate = PureState.from_unnormalized(shape, unitary @ start.amplitudes)
        if not is_fully_product(candidate, tol=min_gap):
            return candidate
        logger.debug("случайное состояние оказалось произведением, повтор")


def random_density_matrix(dims: Sequence[int], rank: int,
                          rng: np.random.Generator) -> DensityMatrix:
    shape = SystemShape(dims)
    if not 1 <= rank <= shape.total_dim:
        raise InvalidParameterError("rank", rank,
                                    f"ранг должен быть в [1, {shape.total_dim}]")
    g = (rng.standard_normal((shape.total_dim, rank))
         + 1j * rng.standard_normal((shape.total_dim, rank)))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(shape, rho / np.trace(rho).real)


def mixture(weights: Sequence[float], states: Sequence[PureState]) -> DensityMatrix:
    """Σ μ_k |Ψ_k⟩⟨Ψ_k|"""
    if len(weights) != len(states) or not states:
        raise InvalidParameterError("weights", list(weights),
                                    "число весов должно совпадать с числом состояний")
    shape = states[0].shape
    rho = sum(mu * s.projector() for mu, s in zip(weights, states))
    return DensityMatrix(shape, rho)
