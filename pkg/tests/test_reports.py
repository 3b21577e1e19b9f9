import pytest

from randcorr_hub.core.exceptions import InvalidParameterError
from randcorr_hub.core.reports import ReproReport, ReproRow, RunManifest


def test_numeric_row_uses_tolerance():
    assert ReproRow("C", 9.0000000001, 9, 1e-9).passed
    assert not ReproRow("C", 9.1, 9, 1e-9).passed


def test_boolean_row_and_row_without_expectation():
    assert ReproRow("ordering", True, True).passed
    assert not ReproRow("ordering", False, True).passed
    assert ReproRow("P", 0.3).passed


def test_unknown_provenance_rejected():
    with pytest.raises(InvalidParameterError):
        ReproRow("C", 1.0, 1.0, provenance="GUESS")


def test_published_failures_only_count_published_rows():
    report = ReproReport("demo")
    report.add(ReproRow("derived", 1.0, 2.0, 0.0, "DERIVED"))
    report.add(ReproRow("published", 0.5, 0.5, 0.01, "PUBLISHED"))
    assert not report.passed
    assert report.published_failures == []
    report.add(ReproRow("published miss", 0.2, 0.5, 0.01, "PUBLISHED"))
    assert [row.name for row in report.published_failures] == ["published miss"]


def test_report_table_and_dict():
    report = ReproReport("demo", [ReproRow("C(GHZ_3)", 4.0, 4, 0.0, "PUBLISHED")])
    table = report.to_table()
    assert "C(GHZ_3)" in table.get_string()
    data = report.to_dict()
    assert data["claim"] == "demo"
    assert data["rows"][0]["provenance"] == "PUBLISHED"


def test_manifest_round_trip(tmp_path):
    path = str(tmp_path / "run.manifest.json")
    manifest = RunManifest("random", {"samples": 100, "seed": 5}, 5)
    assert manifest.finish(["random.json"]).save(path)
    loaded = RunManifest.load(path)
    assert loaded.command == "random"
    assert loaded.parameters == {"samples": 100, "seed": 5}
    assert loaded.seed == 5
    assert loaded.outputs == ["random.json"]
    assert loaded.finished_at == manifest.finished_at
