import json
import os

import numpy as np
import pytest

from minmaxlab import output


def test_cell_text():
    assert output.cell_text(True) == "1"
    assert output.cell_text(False) == "0"
    assert output.cell_text(3) == "3"
    assert output.cell_text(0.1) == "0.1"
    assert output.cell_text(1 / 3) == repr(1 / 3)
    assert output.cell_text("Ab") == "Ab"
    assert output.cell_text(np.float64(0.25)) == "0.25"


def test_csv_text_layout():
    rows = [{"a": 1, "b": 0.5}, {"a": 2, "b": 1 / 3}]
    text = output.csv_text(rows, ("a", "b"), comments=("config: x",))
    lines = text.split("\n")
    assert lines[0] == "# config: x"
    assert lines[1] == "a,b"
    assert lines[2] == "1,0.5"
    assert lines[3] == "2," + repr(1 / 3)
    assert text.endswith("\n")
    # shortest round-trip floats survive parsing exactly
    assert float(lines[3].split(",")[1]) == 1 / 3


def test_csv_text_header_only():
    assert output.csv_text([], ("x", "y")) == "x,y\n"


def test_jsonable_converts_numpy_and_sets():
    val = {
        "a": np.float64(0.5),
        "b": np.int64(3),
        "c": np.array([1, 2]),
        "d": {np.int64(1), np.int64(0)},
        "e": (np.uint8(1), "s"),
    }
    got = output.jsonable(val)
    assert got["a"] == 0.5 and isinstance(got["a"], float)
    assert got["b"] == 3 and isinstance(got["b"], int)
    assert got["c"] == [1, 2]
    assert got["d"] == [0, 1]
    assert got["e"] == [1, "s"]
    json.dumps(got)


def test_json_text_round_trips():
    text = output.json_text({"p": 1 / 3, "rows": [1, 2]})
    assert text.endswith("\n")
    back = json.loads(text)
    assert back["p"] == 1 / 3


def test_pgm_bytes_oracle():
    frame = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert output.pgm_bytes(frame) == b"P5\n2 2\n255\n\x00\xff\xff\x00"


def test_pgm_bytes_comments_and_clipping():
    frame = np.array([[0.0, 2.0], [-1.0, 0.5]])
    data = output.pgm_bytes(frame, comments=("t=3",))
    assert data.startswith(b"P5\n# t=3\n2 2\n255\n")
    assert data[-4:] == bytes([0, 255, 0, 128])


def test_write_csv_and_json_and_pgm(tmp_path):
    p = tmp_path / "rows.csv"
    output.write_csv(p, [{"x": 1}], ("x",))
    assert p.read_text() == "x\n1\n"
    q = tmp_path / "data.json"
    output.write_json(q, {"k": [1, 2]})
    assert json.loads(q.read_text()) == {"k": [1, 2]}
    r = tmp_path / "frame.pgm"
    output.write_pgm(r, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert r.read_bytes() == b"P5\n2 2\n255\n\x00\xff\xff\x00"


def test_writes_are_atomic(tmp_path):
    target = tmp_path / "out.json"
    output.write_json(target, {"v": 1})
    output.write_json(target, {"v": 2})
    assert json.loads(target.read_text()) == {"v": 2}
    # no temp files left behind
    assert os.listdir(tmp_path) == ["out.json"]


def test_write_is_byte_deterministic(tmp_path):
    rows = [{"family": "Ab", "p": 0.61, "estimate": 1 / 7}]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    output.write_csv(a, rows, ("family", "p", "estimate"))
    output.write_csv(b, rows, ("family", "p", "estimate"))
    assert a.read_bytes() == b.read_bytes()
