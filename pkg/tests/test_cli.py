import json

import pytest

from randcorr_hub.cli.interface import (
    CLI,
    EXIT_OK,
    EXIT_USAGE,
    parse_state_spec,
)
from randcorr_hub.core.exceptions import InvalidParameterError, UnknownStateError
from randcorr_hub.core.models import DensityMatrix


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


@pytest.mark.parametrize("spec, dims", [
    ("ghz:4", (2, 2, 2, 2)),
    ("ghz:2:3", (3, 3)),
    ("dicke:4:2", (2, 2, 2, 2)),
    ("w:3", (2, 2, 2)),
    ("cluster:2x3", (2,) * 6),
    ("product:0,1,0", (2, 2, 2)),
    ("bell:phi+", (2, 2)),
    ("double_singlet", (2, 2, 2, 2)),
])
def test_parse_state_spec(spec, dims):
    assert parse_state_spec(spec).shape.local_dims == dims


def test_parse_state_spec_mixed_and_errors():
    assert isinstance(parse_state_spec("wfamily:0.5"), DensityMatrix)
    with pytest.raises(UnknownStateError):
        parse_state_spec("cat:3")
    with pytest.raises(InvalidParameterError):
        parse_state_spec("ghz:three")


def test_length_command(tmp_path, capsys):
    code = CLI().run(["length", "--state", "ghz:4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = read_json(tmp_path / "length.json")
    assert report["C"] == pytest.approx(9.0, abs=1e-9)
    assert "запутано" in capsys.readouterr().out
    manifest = read_json(tmp_path / "length.manifest.json")
    assert manifest["command"] == "length"


def test_length_command_for_product(tmp_path):
    code = CLI().run(["length", "--state", "product:0,0,0", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert read_json(tmp_path / "length.json")["C"] == pytest.approx(1.0)


def test_length_command_csv(tmp_path):
    code = CLI().run(["length", "--state", "bell:psi-", "--format", "csv",
                      "--out", str(tmp_path)])
    assert code == EXIT_OK
    lines = (tmp_path / "length_tensor.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "mu1,mu2,re,im"


def test_bad_state_returns_usage_error(tmp_path, capsys):
    code = CLI().run(["length", "--state", "file:" + str(tmp_path / "none.json"),
                      "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "Ошибка" in capsys.readouterr().out


def test_unknown_command_returns_usage_error():
    assert CLI().run(["teleport"]) == EXIT_USAGE


def test_random_command_and_replay(tmp_path):
    cli = CLI()
    code = cli.run(["random", "--state", "singlet", "--samples", "2000",
                    "--seed", "9", "--out", str(tmp_path)])
    assert code == EXIT_OK
    first = (tmp_path / "random.json").read_bytes()
    manifest = read_json(tmp_path / "random.manifest.json")
    assert manifest["seed"] == 9

    code = cli.run(["replay", "--manifest", str(tmp_path / "random.manifest.json")])
    assert code == EXIT_OK
    assert (tmp_path / "random.json").read_bytes() == first


def test_counterexamples_command(tmp_path):
    code = CLI().run(["counterexamples", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert read_json(tmp_path / "counterexamples.json")["passed"]


def test_cluster_command(tmp_path):
    code = CLI().run(["cluster", "--max-n", "2", "--verify", "--format", "csv",
                      "--out", str(tmp_path)])
    assert code == EXIT_OK
    lines = (tmp_path / "cluster.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("n,qubits,C")
    assert lines[1].split(",")[2] == "5"


def test_cluster_command_guard(tmp_path):
    assert CLI().run(["cluster", "--max-n", "6", "--out", str(tmp_path)]) == \
        EXIT_USAGE


def test_w_family_command(tmp_path):
    code = CLI().run(["w-family", "--p-steps", "5", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = read_json(tmp_path / "w_family.json")
    assert [row["detected"] for row in rows] == [True] * 4 + [False]


def test_roof_command(tmp_path):
    code = CLI().run(["roof", "--state", "wfamily:0.5", "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = read_json(tmp_path / "roof.json")
    assert report["rank"] == 3
    assert report["kind"] == "W"


def test_detection_grid_small(tmp_path):
    code = CLI().run(["detection-grid", "--n", "3", "--shots", "inf",
                      "--trials", "2000", "--calibration-trials", "3000",
                      "--seed", "1", "--out", str(tmp_path)])
    assert code in (0, 2)
    cells = read_json(tmp_path / "detection_grid.json")
    assert cells[0]["n"] == 3
    assert cells[0]["shots"] == "inf"
    assert 0.0 <= cells[0]["probability"] <= 1.0


@pytest.mark.parametrize("argv", [
    ["length", "--state", "ghz:3"],
    ["length", "--state", "bell:psi-", "--format", "csv"],
    ["random", "--state", "singlet", "--samples", "100", "--seed", "3"],
    ["cluster", "--max-n", "2"],
    ["counterexamples"],
    ["roof", "--state", "wfamily:0.5"],
])
def test_unwritable_output_returns_usage_error(tmp_path, capsys, argv):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    code = CLI().run(argv + ["--out", str(blocker / "sub")])
    out = capsys.readouterr().out
    assert code == EXIT_USAGE
    assert "Ошибка" in out
    assert "Результаты" not in out


def test_witness_command(tmp_path, capsys):
    code = CLI().run(["witness", "--state", "ghz:3", "--shots", "inf",
                      "--trials", "2000", "--calibration-trials", "3000",
                      "--seed", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    result = read_json(tmp_path / "witness.json")
    assert 0.0 <= result["probability"] <= 1.0
    assert result["bound"] > 1.0 / 27
    run = result["single_run"]
    assert len(run["directions"]) == 3
    assert run["R"] == pytest.approx(run["E"] ** 2)
    assert run["detected"] == (run["R"] > result["bound"])
    assert "P(обнаружение)" in capsys.readouterr().out


def test_witness_command_rejects_qutrits(tmp_path):
    code = CLI().run(["witness", "--state", "ghz:3:3", "--trials", "100",
                      "--out", str(tmp_path)])
    assert code == EXIT_USAGE


def test_witness_command_rejects_bad_shots(tmp_path, capsys):
    code = CLI().run(["witness", "--state", "ghz:3", "--shots", "many",
                      "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "Ошибка" in capsys.readouterr().out
