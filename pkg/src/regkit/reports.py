"""Deterministic run reports: JSON primary, CSV flat export.

Determinism contract: given the same (instance, seed, policy) the
serialized report is byte-identical across runs — no timestamps, no
environment probes, floats via repr, keys sorted, rows sorted by check
identifier before assembly.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Optional

import numpy as np

from .policy import NumericPolicy


def _plain(value: Any):
    """Convert numpy and dataclass values into canonical JSON-safe forms."""
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if v == float("inf"):
            return "inf"
        if v == float("-inf"):
            return "-inf"
        if v != v:
            return "nan"
        return v
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if is_dataclass(value) and not isinstance(value, type):
        return {k: _plain(v) for k, v in asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        seq = sorted(value, key=repr) if isinstance(value, (set, frozenset)) \
            else value
        return [_plain(v) for v in seq]
    return value


@dataclass
class CheckRow:
    check_id: str
    verdict: str                  # "pass" | "fail" | "error"
    margin: Optional[float] = None
    witness: Any = None
    detail: str = ""


@dataclass
class Report:
    command: str
    seed: int
    policy: NumericPolicy
    rows: list[CheckRow] = field(default_factory=list)

    def add(self, check_id: str, passed: bool, margin=None, witness=None,
            detail: str = ""):
        self.rows.append(CheckRow(check_id, "pass" if passed else "fail",
                                  margin, witness, detail))

    def add_error(self, check_id: str, detail: str):
        self.rows.append(CheckRow(check_id, "error", detail=detail))

    @property
    def ok(self) -> bool:
        return all(r.verdict == "pass" for r in self.rows)

    def summary(self) -> dict:
        counts = {"pass": 0, "fail": 0, "error": 0}
        for r in self.rows:
            counts[r.verdict] += 1
        return {"total": len(self.rows), **counts}

    def to_json(self) -> str:
        rows = sorted(self.rows, key=lambda r: r.check_id)
        doc = {
            "command": self.command,
            "seed": self.seed,
            "policy": _plain(self.policy),
            "rows": [_plain(r) for r in rows],
            "summary": self.summary(),
        }
        return json.dumps(doc, sort_keys=True, indent=1,
                          separators=(",", ": ")) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "verdict", "margin", "witness", "detail"])
        for r in sorted(self.rows, key=lambda r: r.check_id):
            w.writerow([r.check_id, r.verdict,
                        "" if r.margin is None else repr(float(r.margin)),
                        "" if r.witness is None else json.dumps(
                            _plain(r.witness), sort_keys=True),
                        r.detail])
        return buf.getvalue()

    def write(self, path: str):
        if path.endswith(".csv"):
            payload = self.to_csv()
        else:
            payload = self.to_json()
        with open(path, "w") as fh:
            fh.write(payload)
