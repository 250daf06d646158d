"""Metrics tables and their CSV / JSON-lines encodings."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

COLUMNS = ("replication", "round_or_n", "allocator", "m_t", "joining_ratio", "train_loss", "test_accuracy")
_INT_COLS = {"replication", "round_or_n", "m_t"}
_FLOAT_COLS = {"joining_ratio", "train_loss", "test_accuracy"}


@dataclass(frozen=True)
class MetricsRow:
    replication: int
    round_or_n: int
    allocator: str
    m_t: int
    joining_ratio: float
    train_loss: Optional[float] = None
    test_accuracy: Optional[float] = None

    @property
    def key(self):
        return (self.replication, self.round_or_n, self.allocator)


@dataclass
class MetricsTable:
    """Per-round FL traces (``kind='rounds'``) or per-N sweep rows (``kind='sweep'``)."""

    kind: str = "rounds"
    rows: list[MetricsRow] = field(default_factory=list)

    def add(self, row: MetricsRow):
        self.rows.append(row)

    def normalized(self) -> "MetricsTable":
        keys = [r.key for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("metrics rows must be unique on (replication, round_or_n, allocator)")
        return MetricsTable(self.kind, sorted(self.rows, key=lambda r: r.key))

    def select(self, allocator: Optional[str] = None, replication: Optional[int] = None) -> list[MetricsRow]:
        return [
            r for r in self.rows
            if (allocator is None or r.allocator == allocator)
            and (replication is None or r.replication == replication)
        ]

    def allocators(self) -> list[str]:
        return sorted({r.allocator for r in self.rows})

    def summary(self) -> dict[tuple[str, int], dict[str, float]]:
        """Mean and population std of m_t (and joining ratio) per (allocator, round_or_n)."""
        groups: dict[tuple[str, int], list[MetricsRow]] = {}
        for r in self.rows:
            groups.setdefault((r.allocator, r.round_or_n), []).append(r)
        out = {}
        for key, rows in sorted(groups.items()):
            m = [r.m_t for r in rows]
            mean = math.fsum(m) / len(m)
            std = math.sqrt(math.fsum((x - mean) ** 2 for x in m) / len(m))
            out[key] = {
                "mean_m_t": mean,
                "std_m_t": std,
                "mean_joining_ratio": math.fsum(r.joining_ratio for r in rows) / len(rows),
                "outage": sum(x == 0 for x in m) / len(m),
                "count": len(m),
            }
        return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _row_values(row: MetricsRow):
    return [getattr(row, c) for c in COLUMNS]


def to_csv(table: MetricsTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in table.normalized().rows:
        w.writerow([_fmt(v) for v in _row_values(row)])
    return buf.getvalue()


def to_jsonl(table: MetricsTable) -> str:
    lines = []
    for row in table.normalized().rows:
        parts = []
        for c, v in zip(COLUMNS, _row_values(row)):
            if v is None:
                enc = "null"
            elif isinstance(v, str):
                enc = json.dumps(v)
            else:
                enc = _fmt(v)
            parts.append(f"{json.dumps(c)}: {enc}")
        lines.append("{" + ", ".join(parts) + "}\n")
    return "".join(lines)


def write_metrics(table: MetricsTable, path, format: str = "csv") -> None:
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"directory {path.parent} does not exist")
    if format == "csv":
        text = to_csv(table)
    elif format in ("jsonl", "json-lines"):
        text = to_jsonl(table)
    else:
        raise ValueError(f"unknown metrics format {format!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _parse(col: str, value):
    if value is None or value == "":
        return None
    if col in _INT_COLS:
        return int(value)
    if col in _FLOAT_COLS:
        return float(value)
    return value


def read_metrics(path, format: str = "csv", kind: str = "rounds") -> MetricsTable:
    path = Path(path)
    table = MetricsTable(kind)
    if format == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(f"{path}: unexpected header {header}")
            for rec in reader:
                table.add(MetricsRow(**{c: _parse(c, v) for c, v in zip(COLUMNS, rec)}))
    elif format in ("jsonl", "json-lines"):
        for line in path.read_text().splitlines():
            if line.strip():
                obj = json.loads(line)
                table.add(MetricsRow(**{c: _parse(c, obj[c]) for c in COLUMNS}))
    else:
        raise ValueError(f"unknown metrics format {format!r}")
    return table
