import argparse
import os
import sys
from typing import Callable, Dict, List, Optional

from prettytable import PrettyTable

from randcorr_hub.core.exceptions import (
    InvalidParameterError,
    RandCorrError,
    ResultWriteError,
    StateFileError,
    UnknownStateError,
)
from randcorr_hub.core.models import QuantumState
from randcorr_hub.core.randomcorr import shots_label
from randcorr_hub.core.reports import ReproReport, RunManifest
from randcorr_hub.core.statekit import load_state_file, make_named_state
from randcorr_hub.core.usecases import (
    ClusterUseCases,
    CounterexampleUseCases,
    LengthUseCases,
    MixedStateUseCases,
    WitnessUseCases,
)
from randcorr_hub.infra.settings import settings
from randcorr_hub.infra.storage import storage

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REPRODUCTION = 2

_PLAIN_STATES = ("singlet", "double_singlet", "five_qubit_counterexample",
                 "locc_psi", "locc_phi")


def _require_saved(saved: bool, path: str) -> str:
    if not saved:
        raise ResultWriteError(path)
    return path


def parse_state_spec(spec: str) -> QuantumState:
    """
    Состояние по строке: ghz:N[:d], dicke:N:k, w:N, cluster:RxC,
    product:i,j,k, wfamily:p, bell:kind, file:<path> или имя без параметров
    """
    text = spec.strip()
    name, _, rest = text.partition(":")
    key = name.lower().replace("-", "_")
    try:
        if key == "file":
            if not rest:
                raise StateFileError(rest, "не указан путь")
            return load_state_file(rest)
        if key == "ghz":
            parts = rest.split(":")
            d = int(parts[1]) if len(parts) > 1 else 2
            return make_named_state("ghz", int(parts[0]), d)
        if key == "dicke":
            n, k = rest.split(":")
            return make_named_state("dicke", int(n), int(k))
        if key == "w":
            return make_named_state("w", int(rest))
        if key == "cluster":
            rows, _, cols = rest.lower().partition("x")
            return make_named_state("cluster", int(rows), int(cols or rows))
        if key == "product":
            return make_named_state("product", [int(i) for i in rest.split(",")])
        if key in ("wfamily", "w_family"):
            return make_named_state("w_family", float(rest))
        if key == "bell":
            return make_named_state("bell", rest or "psi-")
        if key in _PLAIN_STATES and not rest:
            return make_named_state(key)
    except ValueError:
        raise InvalidParameterError("state", spec, "не удалось разобрать параметры")
    raise UnknownStateError(spec)


class CLI:
    def __init__(self):
        self.length_use_cases = LengthUseCases()
        self.witness_use_cases = WitnessUseCases()
        self.cluster_use_cases = ClusterUseCases()
        self.counterexample_use_cases = CounterexampleUseCases()
        self.mixed_use_cases = MixedStateUseCases()

        self.parser = argparse.ArgumentParser(
            description='Random Correlations Hub - корреляции случайных '
                        'измерений и длина корреляций',
            prog='randcorr'
        )
        self.subparsers = self.parser.add_subparsers(
            dest='command', help='Доступные команды'
        )
        self._setup_commands()
        self.handlers: Dict[str, Callable[[argparse.Namespace], int]] = {
            'length': self.handle_length,
            'random': self.handle_random,
            'detection-grid': self.handle_detection_grid,
            'witness': self.handle_witness,
            'cluster': self.handle_cluster,
            'counterexamples': self.handle_counterexamples,
            'w-family': self.handle_w_family,
            'roof': self.handle_roof,
            'replay': self.handle_replay,
        }

    def _add_common(self, parser: argparse.ArgumentParser,
                    formats: bool = True) -> None:
        parser.add_argument(
            '--out', type=str, default=None,
            help='Каталог результатов (по умолчанию $RANDCORR_OUTPUT_DIR)'
        )
        if formats:
            parser.add_argument(
                '--format', type=str, choices=['json', 'csv'], default='json',
                help='Формат файла результатов'
            )

    def _setup_commands(self):
        length_parser = self.subparsers.add_parser(
            'length', help='Длина корреляций и критерий запутанности'
        )
        length_parser.add_argument(
            '--state', type=str, required=True,
            help='Состояние: ghz:N[:d], dicke:N:k, w:N, cluster:RxC, '
                 'product:i,j,k, wfamily:p, file:<path>'
        )
        length_parser.add_argument(
            '--basis', type=str, default=None,
            help='Базис: pauli, gell-mann, weyl, mixed:<seed>'
        )
        length_parser.add_argument(
            '--workers', type=int, default=None, help='Число потоков'
        )
        self._add_common(length_parser)

        random_parser = self.subparsers.add_parser(
            'random', help='Случайные корреляции: точно и Монте-Карло'
        )
        random_parser.add_argument('--state', type=str, required=True,
                                   help='Состояние')
        random_parser.add_argument('--samples', type=int, default=100_000,
                                   help='Число случайных настроек')
        random_parser.add_argument('--method', type=str, default='haar',
                                   choices=['haar', 'sphere'],
                                   help='Способ выбора настроек')
        random_parser.add_argument('--seed', type=int, default=None, help='Зерно')
        self._add_common(random_parser, formats=False)

        grid_parser = self.subparsers.add_parser(
            'detection-grid', help='Вероятности обнаружения GHZ_N одной настройкой'
        )
        grid_parser.add_argument(
            '--n', type=int, nargs='+', default=list(range(3, 11)),
            help='Числа кубитов (3..10)'
        )
        grid_parser.add_argument(
            '--shots', type=str, nargs='+', default=['1000', 'inf'],
            help='Значения K (целые или inf)'
        )
        grid_parser.add_argument('--trials', type=int, default=None,
                                  help='Испытаний на ячейку')
        grid_parser.add_argument('--calibration-trials', type=int, default=None,
                                  help='Испытаний для калибровки δ')
        grid_parser.add_argument('--confidence', type=float, default=None,
                                  help='Уровень доверия (по умолчанию 0.954)')
        grid_parser.add_argument('--seed', type=int, default=None, help='Зерно')
        grid_parser.add_argument('--workers', type=int, default=None,
                                  help='Число потоков')
        self._add_common(grid_parser)

        witness_parser = self.subparsers.add_parser(
            'witness', help='Свидетель одной случайной настройки для состояния'
        )
        witness_parser.add_argument('--state', type=str, required=True,
                                    help='Состояние N кубитов')
        witness_parser.add_argument('--shots', type=str, default='1000',
                                    help='Число измерений K (целое или inf)')
        witness_parser.add_argument('--trials', type=int, default=None,
                                    help='Число испытаний')
        witness_parser.add_argument('--calibration-trials', type=int, default=None,
                                    help='Испытаний для калибровки δ')
        witness_parser.add_argument('--confidence', type=float, default=None,
                                    help='Уровень доверия (по умолчанию 0.954)')
        witness_parser.add_argument('--seed', type=int, default=None, help='Зерно')
        self._add_common(witness_parser, formats=False)

        cluster_parser = self.subparsers.add_parser(
            'cluster', help='Длина корреляций кластеров n x n'
        )
        cluster_parser.add_argument('--max-n', type=int, default=5,
                                    help='Наибольшая сторона решётки (2..5)')
        cluster_parser.add_argument('--verify', action='store_true',
                                    help='Плотная проверка для n <= 3')
        self._add_common(cluster_parser)

        counter_parser = self.subparsers.add_parser(
            'counterexamples', help='Рост C после локального измерения'
        )
        self._add_common(counter_parser, formats=False)

        w_family_parser = self.subparsers.add_parser(
            'w-family', help='Свидетель для семейства с состоянием W'
        )
        w_family_parser.add_argument('--p-steps', type=int, default=21,
                                     help='Число точек по p')
        self._add_common(w_family_parser)

        roof_parser = self.subparsers.add_parser(
            'roof', help='Выпуклая крыша или свидетель ранга m'
        )
        roof_parser.add_argument('--state', type=str, required=True,
                                 help='Состояние')
        self._add_common(roof_parser, formats=False)

        replay_parser = self.subparsers.add_parser(
            'replay', help='Повторить запуск по манифесту'
        )
        replay_parser.add_argument('--manifest', type=str, required=True,
                                   help='Путь к манифесту')

    def run(self, argv: Optional[List[str]] = None) -> int:
        argv = sys.argv[1:] if argv is None else argv
        if not argv:
            self.parser.print_help()
            return EXIT_OK

        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code == 0 else EXIT_USAGE

        handler = self.handlers.get(args.command)
        if handler is None:
            self.parser.print_help()
            return EXIT_USAGE
        return self.dispatch(handler, args)

    def dispatch(self, handler: Callable[[argparse.Namespace], int],
                 args: argparse.Namespace) -> int:
        try:
            return handler(args)
        except RandCorrError as e:
            print(f"Ошибка: {e}")
            return EXIT_USAGE

    def _output_dir(self, args: argparse.Namespace) -> str:
        return args.out or settings.get("output_dir", "results")

    def _finish(self, args: argparse.Namespace, outputs: List[str],
                seed: Optional[int] = None) -> None:
        parameters = dict(vars(args))
        manifest = RunManifest(args.command, parameters, seed)
        path = os.path.join(self._output_dir(args), f"{args.command}.manifest.json")
        _require_saved(manifest.finish(outputs).save(path), path)
        print(f"Результаты: {', '.join(outputs)}")
        print(f"Манифест: {path}")

    def _report_exit(self, report: ReproReport) -> int:
        print(f"\nПроверка '{report.claim}':")
        print(report.to_table())
        failures = report.published_failures
        if failures:
            names = ", ".join(row.name for row in failures)
            print(f"Не воспроизведено: {names}")
            return EXIT_REPRODUCTION
        return EXIT_OK

    def _save_rows(self, args: argparse.Namespace, name: str,
                   rows: List[Dict]) -> str:
        directory = self._output_dir(args)
        if getattr(args, 'format', 'json') == 'csv':
            path = os.path.join(directory, f"{name}.csv")
            header = list(rows[0].keys()) if rows else []
            saved = storage.save_csv(path, header, ([row.get(k) for k in header]
                                                    for row in rows))
        else:
            path = os.path.join(directory, f"{name}.json")
            saved = storage.save_json(path, rows)
        return _require_saved(saved, path)

    def handle_length(self, args: argparse.Namespace) -> int:
        state = parse_state_spec(args.state)
        report = self.length_use_cases.length_report(state, args.basis,
                                                     args.workers)
        table = PrettyTable()
        table.field_names = ["Величина", "Значение"]
        table.align["Величина"] = "l"
        table.add_row(["состояние", args.state])
        table.add_row(["размерности", "x".join(map(str, report["dims"]))])
        table.add_row(["C", f"{report['C']:.10g}"])
        table.add_row(["порог (d-1)^N", f"{report['threshold']:.10g}"])
        if "sector_lengths" in report:
            sectors = ", ".join(f"{v:.6g}" for v in report["sector_lengths"])
            table.add_row(["C_0..C_N", sectors])
        if report["entangled"] is not None:
            verdict = "запутано" if report["entangled"] else "произведение"
            table.add_row(["вывод", verdict])
        print(table)

        directory = self._output_dir(args)
        if args.format == 'csv':
            path = os.path.join(directory, "length_tensor.csv")
            saved = self.length_use_cases.export_tensor(state, path, args.basis)
        else:
            path = os.path.join(directory, "length.json")
            saved = storage.save_json(path, report)
        _require_saved(saved, path)
        self._finish(args, [path])
        return EXIT_OK

    def handle_random(self, args: argparse.Namespace) -> int:
        state = parse_state_spec(args.state)
        seed = settings.get("default_seed") if args.seed is None else args.seed
        args.seed = seed
        result = self.witness_use_cases.random_correlations(
            state, samples=args.samples, seed=seed, method=args.method
        )
        table = PrettyTable()
        table.field_names = ["R точно", "R оценка", "ошибка", "отклонение, σ"]
        table.add_row([f"{result['R_exact']:.6g}", f"{result['estimate']:.6g}",
                       f"{result['stderr']:.2g}",
                       f"{result['deviation_in_stderr']:.2f}"])
        print(table)
        path = os.path.join(self._output_dir(args), "random.json")
        _require_saved(storage.save_json(path, result), path)
        self._finish(args, [path], seed)
        return EXIT_OK

    def handle_detection_grid(self, args: argparse.Namespace) -> int:
        seed = settings.get("default_seed") if args.seed is None else args.seed
        args.seed = seed
        cells, report = self.witness_use_cases.detection_grid(
            args.n, args.shots, trials=args.trials, seed=seed,
            confidence=args.confidence,
            calibration_trials=args.calibration_trials, workers=args.workers
        )
        regimes = []
        for cell in cells:
            if cell.shots not in regimes:
                regimes.append(cell.shots)
        table = PrettyTable()
        table.field_names = ["K"] + [f"N={n}" for n in args.n]
        for shots in regimes:
            row = [shots_label(shots)]
            for n in args.n:
                cell = next(c for c in cells if c.n == n and c.shots == shots)
                published = ("" if cell.published is None
                             else f" ({cell.published * 100:.0f})")
                row.append(f"{cell.report.probability * 100:.1f}{published}")
            table.add_row(row)
        print("Вероятность обнаружения, % (в скобках печатное значение)")
        print(table)

        if args.format == 'csv':
            path = os.path.join(self._output_dir(args), "detection_grid.csv")
            header = ["K"] + [str(n) for n in args.n]
            rows = []
            for shots in regimes:
                rows.append([shots_label(shots)] + [
                    next(c for c in cells if c.n == n and c.shots == shots)
                    .report.probability for n in args.n
                ])
            _require_saved(storage.save_csv(path, header, rows), path)
        else:
            path = self._save_rows(args, "detection_grid",
                                   [c.to_dict() for c in cells])
        report_path = os.path.join(self._output_dir(args),
                                   "detection_grid.report.json")
        _require_saved(storage.save_json(report_path, report.to_dict()),
                       report_path)
        self._finish(args, [path, report_path], seed)
        return self._report_exit(report)

    def handle_witness(self, args: argparse.Namespace) -> int:
        state = parse_state_spec(args.state)
        seed = settings.get("default_seed") if args.seed is None else args.seed
        args.seed = seed
        report = self.witness_use_cases.detection(
            state, args.shots, confidence=args.confidence, trials=args.trials,
            seed=seed, calibration_trials=args.calibration_trials
        )
        run = self.witness_use_cases.single_setting_run(
            state, report.bound, report.config.shots, seed
        )
        table = PrettyTable()
        table.field_names = ["Величина", "Значение"]
        table.align["Величина"] = "l"
        table.add_row(["K", shots_label(report.config.shots)])
        table.add_row(["порог 1/3^N + δ", f"{report.bound:.6g}"])
        table.add_row(["P(обнаружение)",
                       f"{report.probability:.4f} ± {report.stderr:.4f}"])
        table.add_row(["R̂ одного запуска", f"{run['R']:.6g}"])
        verdict = "обнаружено" if run["detected"] else "не обнаружено"
        table.add_row(["вывод одного запуска", verdict])
        print(table)
        path = os.path.join(self._output_dir(args), "witness.json")
        result = {**report.to_dict(), "single_run": run}
        _require_saved(storage.save_json(path, result), path)
        self._finish(args, [path], seed)
        return EXIT_OK

    def handle_cluster(self, args: argparse.Namespace) -> int:
        rows, report = self.cluster_use_cases.cluster_scan(
            max_n=args.max_n, verify=args.verify
        )
        table = PrettyTable()
        table.field_names = ["n", "кубитов", "C", "log2 C", "C(GHZ)", "C(произв.)"]
        for row in rows:
            table.add_row([row["n"], row["qubits"], row["C"],
                           f"{row['log2_C']:.4f}", row["ghz_C"], row["product_C"]])
        print(table)
        path = self._save_rows(args, "cluster", rows)
        self._finish(args, [path])
        return self._report_exit(report)

    def handle_counterexamples(self, args: argparse.Namespace) -> int:
        report = self.counterexample_use_cases.counterexamples()
        path = os.path.join(self._output_dir(args), "counterexamples.json")
        _require_saved(storage.save_json(path, report.to_dict()), path)
        self._finish(args, [path])
        return self._report_exit(report)

    def handle_w_family(self, args: argparse.Namespace) -> int:
        rows, report = self.mixed_use_cases.w_family_scan(p_steps=args.p_steps)
        table = PrettyTable()
        table.field_names = ["p", "W", "W (w_min/m)", "C", "Tr ρ²"]
        for row in rows:
            table.add_row([f"{row['p']:.3f}", f"{row['W']:.6f}",
                           f"{row['W_variant']:.6f}", f"{row['C']:.6f}",
                           f"{row['purity']:.6f}"])
        print(table)
        path = self._save_rows(args, "w_family", rows)
        self._finish(args, [path])
        return self._report_exit(report)

    def handle_roof(self, args: argparse.Namespace) -> int:
        state = parse_state_spec(args.state)
        report = self.mixed_use_cases.roof(state)
        table = PrettyTable()
        table.field_names = ["Величина", "Значение"]
        table.align["Величина"] = "l"
        for key in ("rank", "C", "purity", "threshold", "w_min", "E_or_W",
                    "variant_w_min_over_m", "entangled_flag"):
            value = report[key]
            table.add_row([key, f"{value:.10g}" if isinstance(value, float)
                           else value])
        print(table)
        path = os.path.join(self._output_dir(args), "roof.json")
        _require_saved(storage.save_json(path, report), path)
        self._finish(args, [path])
        return EXIT_OK

    def handle_replay(self, args: argparse.Namespace) -> int:
        try:
            manifest = RunManifest.load(args.manifest)
        except (OSError, ValueError, KeyError) as e:
            raise StateFileError(args.manifest, str(e))
        handler = self.handlers.get(manifest.command)
        if handler is None or manifest.command == 'replay':
            raise InvalidParameterError("command", manifest.command,
                                        "команда не поддерживает повтор")
        print(f"Повтор '{manifest.command}' (seed={manifest.seed})")
        replayed = argparse.Namespace(**manifest.parameters)
        return handler(replayed)


def main():
    cli = CLI()
    sys.exit(cli.run())


if __name__ == "__main__":
    main()
