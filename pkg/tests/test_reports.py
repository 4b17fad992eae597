"""Report serialization: canonical values, determinism, CSV shape."""
import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from regkit.policy import DEFAULT_POLICY, INF
from regkit.reports import CheckRow, Report, _plain


def test_plain_canonicalizes_floats():
    assert _plain(np.float64(1.5)) == 1.5
    assert _plain(INF) == "inf"
    assert _plain(-INF) == "-inf"
    assert _plain(float("nan")) == "nan"
    assert _plain(np.int32(7)) == 7
    assert _plain(np.bool_(True)) is True


def test_plain_handles_containers_and_dataclasses():
    assert _plain(np.array([1.0, INF])) == [1.0, "inf"]
    assert _plain({3: np.float32(0.5)}) == {"3": 0.5}
    # sets come out in a deterministic order
    assert _plain({"b", "a", "c"}) == ["a", "b", "c"]

    @dataclass
    class Inner:
        x: float
        y: np.ndarray

    got = _plain(Inner(x=INF, y=np.array([1, 2])))
    assert got == {"x": "inf", "y": [1, 2]}


def _sample_report():
    rep = Report(command="certify", seed=3, policy=DEFAULT_POLICY)
    rep.add("b-check", True, margin=0.5, witness=(1, 2))
    rep.add("a-check", False, margin=-0.1, detail="bound exceeded")
    rep.add_error("c-check", "solver failure")
    return rep


def test_summary_and_ok():
    rep = _sample_report()
    assert rep.summary() == {"total": 3, "pass": 1, "fail": 1, "error": 1}
    assert not rep.ok
    good = Report(command="x", seed=0, policy=DEFAULT_POLICY)
    good.add("only", True)
    assert good.ok


def test_json_is_sorted_and_byte_deterministic():
    a = _sample_report().to_json()
    b = _sample_report().to_json()
    assert a == b
    doc = json.loads(a)
    ids = [r["check_id"] for r in doc["rows"]]
    assert ids == sorted(ids)
    assert list(doc.keys()) == sorted(doc.keys())
    assert "policy" in doc and doc["seed"] == 3
    # no timestamps or environment data anywhere
    assert "time" not in a.lower()


def test_csv_shape():
    rep = _sample_report()
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["check_id", "verdict", "margin", "witness", "detail"]
    assert len(rows) == 4
    assert [r[0] for r in rows[1:]] == ["a-check", "b-check", "c-check"]
    assert rows[1][1] == "fail" and rows[3][1] == "error"


def test_write_dispatches_on_extension(tmp_path):
    rep = _sample_report()
    jp = tmp_path / "out.json"
    cp = tmp_path / "out.csv"
    rep.write(str(jp))
    rep.write(str(cp))
    assert jp.read_text() == rep.to_json()
    assert cp.read_text() == rep.to_csv()
    # double write is byte-identical
    rep.write(str(jp))
    assert jp.read_text() == rep.to_json()


def test_infinite_margins_survive_roundtrip():
    rep = Report(command="x", seed=0, policy=DEFAULT_POLICY)
    rep.add("inf-check", True, margin=INF, witness=np.array([INF, 0.0]))
    doc = json.loads(rep.to_json())
    row = doc["rows"][0]
    assert row["margin"] == "inf"
    assert row["witness"] == ["inf", 0.0]
