"""
Отчёты о воспроизведении численных утверждений и манифесты запусков
"""

from datetime import datetime
from typing import Any, Dict, List, Optional

from prettytable import PrettyTable

from randcorr_hub import __version__
from randcorr_hub.core.exceptions import InvalidParameterError
from randcorr_hub.infra.storage import storage

PROVENANCE_TAGS = ("PUBLISHED", "DERIVED", "TRIVIAL")


class ReproRow:
    """
    Одна проверяемая величина: вычисленное значение, ожидаемое, допуск
    """

    def __init__(self, name: str, computed: Any, expected: Any = None,
                 tolerance: float = 0.0, provenance: str = "DERIVED",
                 passed: Optional[bool] = None):
        if provenance not in PROVENANCE_TAGS:
            raise InvalidParameterError("provenance", provenance,
                                        f"ожидалось одно из {PROVENANCE_TAGS}")
        self._name = name
        self._computed = computed
        self._expected = expected
        self._tolerance = tolerance
        self._provenance = provenance
        if passed is None:
            passed = self._compare()
        self._passed = bool(passed)

    def _compare(self) -> bool:
        if self._expected is None:
            return True
        if isinstance(self._expected, bool):
            return bool(self._computed) == self._expected
        return abs(float(self._computed) - float(self._expected)) <= self._tolerance

    @property
    def name(self) -> str:
        return self._name

    @property
    def computed(self) -> Any:
        return self._computed

    @property
    def expected(self) -> Any:
        return self._expected

    @property
    def tolerance(self) -> float:
        return self._tolerance

    @property
    def provenance(self) -> str:
        return self._provenance

    @property
    def passed(self) -> bool:
        return self._passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self._name,
            "computed": self._computed,
            "expected": self._expected,
            "tolerance": self._tolerance,
            "provenance": self._provenance,
            "passed": self._passed,
        }


class ReproReport:
    """
    Набор строк по одному утверждению
    (detection_grid, cluster, w_family, counterexamples)
    """

    def __init__(self, claim: str, rows: Optional[List[ReproRow]] = None):
        self._claim = claim
        self._rows: List[ReproRow] = list(rows or [])

    @property
    def claim(self) -> str:
        return self._claim

    @property
    def rows(self) -> List[ReproRow]:
        return list(self._rows)

    def add(self, row: ReproRow) -> "ReproReport":
        self._rows.append(row)
        return self

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self._rows)

    @property
    def published_failures(self) -> List[ReproRow]:
        """Строки с меткой PUBLISHED, не прошедшие проверку"""
        return [row for row in self._rows
                if row.provenance == "PUBLISHED" and not row.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "claim": self._claim,
            "passed": self.passed,
            "rows": [row.to_dict() for row in self._rows],
        }

    def to_table(self) -> PrettyTable:
        table = PrettyTable()
        table.field_names = ["Величина", "Значение", "Ожидание", "Допуск",
                             "Источник", "OK"]
        for row in self._rows:
            table.add_row([
                row.name,
                _short(row.computed),
                "-" if row.expected is None else _short(row.expected),
                f"{row.tolerance:g}",
                row.provenance,
                "да" if row.passed else "НЕТ",
            ])
        table.align["Величина"] = "l"
        return table


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class RunManifest:
    """
    Параметры запуска команды: по манифесту команду можно повторить
    """

    def __init__(self, command: str, parameters: Dict[str, Any], seed: Optional[int],
                 version: str = __version__,
                 started_at: Optional[datetime] = None,
                 finished_at: Optional[datetime] = None,
                 outputs: Optional[List[str]] = None):
        self.command = command
        self.parameters = dict(parameters)
        self.seed = seed
        self.version = version
        self.started_at = started_at or datetime.now()
        self.finished_at = finished_at
        self.outputs = list(outputs or [])

    def finish(self, outputs: List[str]) -> "RunManifest":
        self.outputs = list(outputs)
        self.finished_at = datetime.now()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
            "started_at": self.started_at.isoformat(),
            "finished_at": (self.finished_at.isoformat()
                            if self.finished_at else None),
            "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        finished = data.get("finished_at")
        return cls(
            command=data["command"],
            parameters=data.get("parameters", {}),
            seed=data.get("seed"),
            version=data.get("version", __version__),
            started_at=datetime.fromisoformat(data["started_at"]),
            finished_at=datetime.fromisoformat(finished) if finished else None,
            outputs=data.get("outputs", []),
        )

    def save(self, path: str) -> bool:
        return storage.save_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        return cls.from_dict(storage.load_json(path))
