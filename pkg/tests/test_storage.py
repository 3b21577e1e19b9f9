import json
import os

import numpy as np
import pytest

from randcorr_hub.infra.storage import storage


def test_load_json_sees_external_rewrite(tmp_path):
    path = str(tmp_path / "manifest.json")
    assert storage.save_json(path, {"seed": 1})
    assert storage.load_json(path) == {"seed": 1}

    with open(path, "w", encoding="utf-8") as f:
        json.dump({"seed": 12345, "command": "random"}, f)
    assert storage.load_json(path) == {"seed": 12345, "command": "random"}


def test_load_json_returns_cached_copy_while_unchanged(tmp_path):
    path = str(tmp_path / "state.json")
    assert storage.save_json(path, {"dims": [2, 2]})
    first = storage.load_json(path)
    assert storage.load_json(path) is first


def test_load_json_after_delete(tmp_path):
    path = str(tmp_path / "gone.json")
    assert storage.save_json(path, [1, 2])
    storage.load_json(path)
    os.remove(path)
    assert storage.load_json(path, default=[]) == []
    with pytest.raises(FileNotFoundError):
        storage.load_json(path)


def test_save_json_converts_numpy(tmp_path):
    path = str(tmp_path / "arrays.json")
    assert storage.save_json(path, {"v": np.arange(3), "x": np.float64(0.5)})
    assert storage.load_json(path) == {"v": [0, 1, 2], "x": 0.5}


def test_save_reports_failure_for_unwritable_path(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")
    assert not storage.save_json(str(blocker / "out.json"), {})
    assert not storage.save_csv(str(blocker / "out.csv"), ["a"], [[1]])
