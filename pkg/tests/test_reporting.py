import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boolcov.reporting import RunManifest, config_hash, file_digest, read_csv, write_csv, write_json

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_csv_round_trip_bit_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_csv(path, ["a", "b", "c"], rows, {"k": 1})
    header, data, comment = read_csv(path)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(data, np.array(rows, dtype=float))
    assert comment.startswith("# boolcov ") and "config=" in comment


def test_csv_integers_and_nan(tmp_path):
    path = write_csv(tmp_path / "x.csv", ["i", "v"], [[1, float("nan")], [np.int64(2), 0.1]], {})
    text = path.read_text().splitlines()
    assert text[2] == "1,nan" and text[3] == "2,0.1"


def test_config_hash_is_canonical():
    assert config_hash({"a": 1, "b": [1.5, 2]}) == config_hash({"b": [1.5, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert config_hash({"x": np.float64(0.5)}) == config_hash({"x": 0.5})
    assert len(config_hash({})) == 16


def test_write_json_handles_numpy(tmp_path):
    p = write_json(tmp_path / "o.json", {"m": np.eye(2), "v": np.float32(1.5), "bad": float("inf")})
    obj = json.loads(p.read_text())
    assert obj == {"m": [[1.0, 0.0], [0.0, 1.0]], "v": 1.5, "bad": None}


def test_manifest_digests(tmp_path):
    a = write_csv(tmp_path / "a.csv", ["x"], [[1.0]], {})
    b = write_json(tmp_path / "b.json", {"y": 2})
    m = RunManifest(command="boolcov test", config={"q": 1}, master_seed=7)
    m.add(a)
    m.add(b)
    path = m.write(tmp_path)
    obj = json.loads(path.read_text())
    assert obj["outputs"] == {"a.csv": file_digest(a), "b.json": file_digest(b)}
    assert obj["master_seed"] == 7 and obj["version"]
    assert RunManifest.verify(tmp_path)
    a.write_text(a.read_text() + "\n")
    assert not RunManifest.verify(tmp_path)


def test_rerun_gives_identical_digest(tmp_path):
    rows = [[0.1, 0.2], [1 / 3, 2 / 3]]
    d1 = file_digest(write_csv(tmp_path / "r1.csv", ["a", "b"], rows, {"s": 1}))
    d2 = file_digest(write_csv(tmp_path / "r2.csv", ["a", "b"], rows, {"s": 1}))
    assert d1 == d2
    d3 = file_digest(write_csv(tmp_path / "r3.csv", ["a", "b"], rows, {"s": 2}))
    assert d3 != d1


def test_manifest_custom_name(tmp_path):
    a = write_json(tmp_path / "a.json", {})
    m = RunManifest(command="c", config={})
    m.add(a)
    m.write(tmp_path, "a.manifest.json")
    assert RunManifest.verify(tmp_path, "a.manifest.json")
    with pytest.raises(FileNotFoundError):
        RunManifest.verify(tmp_path)
