"""Verification records and their JSON/CSV serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, List, Optional

COLUMNS = ("check", "status", "computed", "expected", "tolerance", "witness", "runtime_ms")


@dataclass
class CheckResult:
    check: str
    status: str
    computed: Any = None
    expected: Any = None
    tolerance: Optional[float] = None
    witness: Any = None
    runtime_ms: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {k: _jsonable(getattr(self, k)) for k in COLUMNS}


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    # wall-clock times per check, shown in the summary but kept out of the
    # serialised report so that it is byte-stable for a fixed seed
    timings: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport") -> None:
        self.checks.extend(other.checks)
        self.timings.update(other.timings)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.check == name:
                return c
        raise KeyError(name)

    def sorted(self) -> "VerificationReport":
        return VerificationReport(sorted(self.checks, key=lambda c: c.check), dict(self.meta), dict(self.timings))

    def to_json(self) -> str:
        payload = {"meta": _jsonable(self.meta), "checks": [c.to_dict() for c in self.checks]}
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for c in self.checks:
            row = c.to_dict()
            writer.writerow([_csv_cell(row[k]) for k in COLUMNS])
        return buf.getvalue()

    def summary(self) -> str:
        width = max([len(c.check) for c in self.checks] + [5])
        lines = [f"{'check':<{width}}  status  computed              tolerance   runtime_ms"]
        for c in self.checks:
            ms = c.runtime_ms if c.runtime_ms is not None else self.timings.get(c.check)
            lines.append(f"{c.check:<{width}}  {c.status:<6}  {_short(c.computed):<20}  "
                         f"{_short(c.tolerance):<10}  {_short(ms)}")
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        payload = json.loads(text)
        checks = [CheckResult(**{k: row.get(k) for k in COLUMNS}) for row in payload["checks"]]
        return cls(checks, payload.get("meta", {}))


def emit_report(report: VerificationReport, fmt: str = "json", path=None) -> str:
    """Serialise ``report``; write it to ``path`` when given.  Returns the text."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _jsonable(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):  # numpy scalars
        return _jsonable(value.item())
    return value


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


def _short(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)
