import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from randcorr_hub.core.convexroof import roof_report, w_family_sweep
from randcorr_hub.core.correlations import (
    correlation_tensor,
    entanglement_report,
    export_tensor_csv,
    length_of_correlations,
)
from randcorr_hub.core.exceptions import InvalidParameterError, SizeGuardError
from randcorr_hub.core.models import QuantumState
from randcorr_hub.core.opbasis import basis_by_name
from randcorr_hub.core.randomcorr import (
    DetectionCell,
    MonteCarloEstimate,
    WitnessConfig,
    WitnessReport,
    detection_probability,
    exact_random_correlations,
    mc_random_correlations,
    sample_setting,
    simulate_shot_estimate,
)
from randcorr_hub.core.randomcorr import (
    detection_grid as run_detection_grid,
)
from randcorr_hub.core.reports import ReproReport, ReproRow
from randcorr_hub.core.sampling import make_rng
from randcorr_hub.core.stabilizer import (
    StabilizerGroup,
    stabilizer_length_of_correlations,
)
from randcorr_hub.core.statekit import (
    cluster,
    cluster_graph,
    five_qubit_counterexample,
    locc_phi,
    locc_psi,
    measure_party,
)
from randcorr_hub.decorators import log_action
from randcorr_hub.infra.settings import settings

# порог свидетеля для N=6, K=1000
PUBLISHED_BOUND_N6 = 0.01
PUBLISHED_BOUND_TOLERANCE = 0.003


def _bases_for(state: QuantumState, basis_name: Optional[str]):
    if basis_name is None:
        return None
    return [basis_by_name(basis_name, d) for d in state.shape.local_dims]


def _check_dense(state: QuantumState) -> None:
    limit = settings.get("max_dense_qubits", 16)
    if state.shape.party_count > limit:
        raise SizeGuardError("частиц для плотного перебора строк", limit,
                             state.shape.party_count)


class LengthUseCases:
    """Длина корреляций и критерий запутанности"""

    @log_action(action_name="LENGTH", verbose=True)
    def length_report(self, state: QuantumState, basis_name: Optional[str] = None,
                      workers: Optional[int] = None) -> Dict:
        """
        Сводка {C, sector_lengths, basis, threshold, entangled}
        """
        _check_dense(state)
        bases = _bases_for(state, basis_name)
        return entanglement_report(state, bases, basis_name or "default", workers)

    @log_action(action_name="EXPORT_TENSOR")
    def export_tensor(self, state: QuantumState, path: str,
                      basis_name: Optional[str] = None) -> bool:
        _check_dense(state)
        tensor = correlation_tensor(state, _bases_for(state, basis_name))
        return export_tensor_csv(tensor, path)


class WitnessUseCases:
    """Случайные корреляции и свидетель одной случайной настройки"""

    @log_action(action_name="RANDOM_CORRELATIONS", verbose=True)
    def random_correlations(self, state: QuantumState, samples: int,
                            seed: Optional[int] = None, method: str = "haar",
                            initial_operator: Optional[np.ndarray] = None) -> Dict:
        """Точное R и оценка Монте-Карло"""
        exact = exact_random_correlations(state)
        estimate: MonteCarloEstimate = mc_random_correlations(
            state, samples, initial_operator, seed, method
        )
        deviation = abs(estimate.estimate - exact)
        return {
            "R_exact": exact,
            **estimate.to_dict(),
            "deviation_in_stderr": (deviation / estimate.stderr
                                    if estimate.stderr > 0 else 0.0),
        }

    @log_action(action_name="DETECTION", verbose=True)
    def detection(self, state: QuantumState, shots=None,
                  confidence: Optional[float] = None,
                  trials: Optional[int] = None, seed: Optional[int] = None,
                  calibration_trials: Optional[int] = None) -> WitnessReport:
        config = WitnessConfig(state.shape.party_count, shots, confidence,
                               calibration_trials=calibration_trials)
        return detection_probability(state, config, trials, seed)

    @log_action(action_name="SINGLE_SETTING_RUN")
    def single_setting_run(self, state: QuantumState, bound: float, shots=None,
                           seed: Optional[int] = None) -> Dict:
        """
        Один эксперимент: случайные направления, K измерений, R̂ = Ê² против порога
        """
        rng = make_rng(seed)
        setting = sample_setting(state.shape, rng, method="sphere")
        estimate = simulate_shot_estimate(state, setting, shots, rng)
        return {
            "directions": setting.values,
            "E": estimate,
            "R": estimate ** 2,
            "bound": bound,
            "detected": bool(estimate ** 2 > bound),
        }

    @log_action(action_name="DETECTION_GRID", verbose=True)
    def detection_grid(self, n_values: Sequence[int], shots_values: Sequence,
                       trials: Optional[int] = None, seed: Optional[int] = None,
                       confidence: Optional[float] = None,
                       calibration_trials: Optional[int] = None,
                       workers: Optional[int] = None,
                       ) -> Tuple[List[DetectionCell], ReproReport]:
        """
        Сетка вероятностей обнаружения и отчёт о сравнении с печатными значениями
        """
        cells = run_detection_grid(n_values, shots_values, trials, seed,
                                   confidence, calibration_trials, workers)
        report = ReproReport("detection_grid")
        tolerance = settings.get("detection_tolerance_pp", 4.0) / 100.0
        for cell in cells:
            label = f"P(N={cell.n}, K={cell.to_dict()['shots']})"
            if cell.published is None:
                report.add(ReproRow(label, cell.report.probability))
            else:
                report.add(ReproRow(label, cell.report.probability, cell.published,
                                    tolerance, "PUBLISHED"))
            if cell.n == 6 and cell.shots == 1000:
                report.add(ReproRow("bound(N=6, K=1000)", cell.report.bound,
                                    PUBLISHED_BOUND_N6, PUBLISHED_BOUND_TOLERANCE,
                                    "PUBLISHED"))
        return cells, report


class ClusterUseCases:
    """Длина корреляций двумерных кластерных состояний"""

    @log_action(action_name="CLUSTER", verbose=True)
    def cluster_scan(self, max_n: int,
                     verify: bool = False) -> Tuple[List[Dict], ReproReport]:
        """
        C кластера n x n для n = 2..max_n, базовые линии GHZ и произведения

        Raises:
            SizeGuardError: если max_n больше max_cluster_side
        """
        limit = settings.get("max_cluster_side", 5)
        if max_n > limit:
            raise SizeGuardError("стороны кластера", limit, max_n)
        if max_n < 2:
            raise InvalidParameterError("max_n", max_n, "n должно быть >= 2")

        rows = []
        report = ReproReport("cluster")
        for n in range(2, max_n + 1):
            qubits = n * n
            value = stabilizer_length_of_correlations(
                StabilizerGroup.from_graph(cluster_graph(n, n))
            )
            ghz_value = stabilizer_length_of_correlations(StabilizerGroup.ghz(qubits))
            row = {
                "n": n,
                "qubits": qubits,
                "C": value,
                "log2_C": math.log2(value),
                "ghz_C": ghz_value,
                "product_C": 1,
            }
            if verify and n <= 3:
                dense = length_of_correlations(cluster(n, n))
                row["dense_C"] = dense
                report.add(ReproRow(f"dense C(cluster {n}x{n})", dense, value,
                                    1e-9, "DERIVED"))
            rows.append(row)

            expected_ghz = 2 ** (qubits - 1) + (1 if qubits % 2 == 0 else 0)
            provenance = "PUBLISHED" if qubits % 2 == 1 else "DERIVED"
            report.add(ReproRow(f"C(GHZ_{qubits})", ghz_value, expected_ghz,
                                0.0, provenance))
            report.add(ReproRow(f"1 < C(cluster {n}x{n}) < C(GHZ_{qubits})",
                                1 < value < ghz_value, True))
            if n == 2:
                report.add(ReproRow("C(cluster 2x2)", value, 5, 0.0, "DERIVED"))
        return rows, report


class CounterexampleUseCases:
    """Рост длины корреляций при локальных операциях"""

    @log_action(action_name="COUNTEREXAMPLES", verbose=True)
    def counterexamples(self) -> ReproReport:
        report = ReproReport("counterexamples")
        psi = five_qubit_counterexample()
        before = length_of_correlations(psi)
        report.add(ReproRow("C(Ψ)", before, 8, 1e-9, "PUBLISHED"))

        average = 0.0
        for outcome in (0, 1):
            probability, branch = measure_party(psi, 0, outcome)
            value = length_of_correlations(branch)
            average += probability * value
            report.add(ReproRow(f"C(ветвь {outcome})", value, 9, 1e-9, "PUBLISHED"))
        report.add(ReproRow("среднее C после измерения > C(Ψ)",
                            average > before, True, provenance="PUBLISHED"))

        report.add(ReproRow("C(ψ)", length_of_correlations(locc_psi()), 8, 1e-9,
                            "PUBLISHED"))
        report.add(ReproRow("C(φ)", length_of_correlations(locc_phi()), 9, 1e-9,
                            "PUBLISHED"))
        return report


class MixedStateUseCases:
    """Выпуклая крыша и свидетель для смешанных состояний"""

    @log_action(action_name="ROOF", verbose=True)
    def roof(self, state: QuantumState) -> Dict:
        return roof_report(state)

    @log_action(action_name="W_FAMILY", verbose=True)
    def w_family_scan(self, p_steps: int) -> Tuple[List[Dict], ReproReport]:
        """
        W(ρ), C(ρ), Tr ρ² на сетке p ∈ [0, 1] для семейства с состоянием W
        """
        if p_steps < 2:
            raise InvalidParameterError("p_steps", p_steps, "нужно хотя бы 2 точки")
        rows = w_family_sweep(np.linspace(0.0, 1.0, p_steps))
        report = ReproReport("w_family")
        for row in rows:
            if row["p"] < 1.0:
                report.add(ReproRow(f"W(p={row['p']:.4g}) > 1", row["W"] > 1.0,
                                    True, provenance="PUBLISHED"))
            else:
                report.add(ReproRow("W(p=1) <= 1", row["W"] <= 1.0 + 1e-9, True))
        first = rows[0]
        if first["p"] == 0.0:
            report.add(ReproRow("W(p=0) = C(W)", first["W"], first["C"], 1e-9,
                                "TRIVIAL"))
        return rows, report
