import os
import threading

import pytest
from hypothesis import given, strategies as st

from geogreen.cache import CacheCorruption, atomic_write_text, read_csv, read_json, write_csv, write_json
from geogreen.newform import KNOWN_CURVES, coefficients, read_coeff_csv


def test_empty_table(tmp_path):
    write_csv(tmp_path / "e.csv", ["m", "c"], [])
    assert read_csv(tmp_path / "e.csv", ["m", "c"]) == []


def test_large_roundtrip(tmp_path):
    rows = [[m, (m * 7919) % 1013 - 506] for m in range(1, 10001)]
    write_csv(tmp_path / "big.csv", ["m", "c"], rows)
    back = read_csv(tmp_path / "big.csv", ["m", "c"])
    assert [[int(a), int(b)] for a, b in back] == rows


@given(st.lists(st.tuples(st.integers(), st.text(alphabet="abc,\"\n ", max_size=6)), max_size=20))
def test_csv_roundtrip_property(rows):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "t.csv"
        write_csv(p, ["k", "v"], rows)
        assert read_csv(p, ["k", "v"]) == [[str(a), b] for a, b in rows]


def test_checksum_detects_edit(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["m", "c"], [[1, 1], [2, -2]])
    p.write_text(p.read_text().replace("-2", "-3"))
    with pytest.raises(CacheCorruption):
        read_csv(p, ["m", "c"])
    assert read_csv(p, ["m", "c"], verify=False)[1] == ["2", "-3"]


def test_bad_header(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b"], [[1, 2]])
    with pytest.raises(CacheCorruption):
        read_csv(p, ["m", "c"])


def test_json_roundtrip_and_corruption(tmp_path):
    write_json(tmp_path / "x.json", {"b": [1, 2], "a": 0.5})
    assert read_json(tmp_path / "x.json") == {"a": 0.5, "b": [1, 2]}
    (tmp_path / "x.json").write_text('{"a": ')
    with pytest.raises(CacheCorruption):
        read_json(tmp_path / "x.json")


def test_atomic_write_leaves_no_temp_files(tmp_path):
    p = tmp_path / "sub" / "f.txt"

    def writer(k):
        for _ in range(20):
            atomic_write_text(p, str(k) * 1000)

    ts = [threading.Thread(target=writer, args=(k,)) for k in range(4)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    text = p.read_text()
    # every read sees one complete write, never a mix
    assert len(set(text)) == 1 and len(text) == 1000
    assert os.listdir(p.parent) == ["f.txt"]


def test_failed_write_keeps_old_file(tmp_path):
    p = tmp_path / "f.txt"
    atomic_write_text(p, "old")

    with pytest.raises(TypeError):
        atomic_write_text(p, 123)
    assert p.read_text() == "old"
    assert os.listdir(tmp_path) == ["f.txt"]


def test_coefficient_cache_recovers_from_corruption(tmp_path):
    E = KNOWN_CURVES["11a"]
    T = coefficients(E, 50, tmp_path)
    (path,) = tmp_path.glob("coeffs_11a_*.csv")
    assert read_coeff_csv(path).coeffs.tolist() == T.coeffs.tolist()
    path.write_text(path.read_text().replace("\n2,-2\n", "\n2,5\n"))
    # a tampered file is detected and rebuilt
    again = coefficients(E, 50, tmp_path)
    assert again.coeffs.tolist() == T.coeffs.tolist()
    assert read_coeff_csv(path).coeffs.tolist() == T.coeffs.tolist()
