"""CSV and JSON-lines writers shared by the CLI."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, is_dataclass
from typing import Iterable, Sequence

from .model import CycleRecord
from .simulator import RECORD_COLUMNS


def fmt(value) -> str:
    """Shortest round-trip text for floats (at least 12 significant digits of precision)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, enum.Enum):
        return str(value.value)
    return str(value)


def write_rows(fh, columns: Sequence[str], rows: Iterable) -> None:
    fh.write(",".join(columns) + "\n")
    for row in rows:
        get = row.get if isinstance(row, dict) else (lambda k, r=row: getattr(r, k))
        fh.write(",".join(fmt(get(c)) for c in columns) + "\n")


def write_records(fh, records: Iterable[CycleRecord]) -> None:
    write_rows(fh, RECORD_COLUMNS, records)


def read_records(fh) -> list[CycleRecord]:
    out = []
    for row in csv.DictReader(fh):
        out.append(
            CycleRecord(
                word=row["word"],
                g=int(row["g"]),
                h=int(row["h"]),
                d=int(row["d"]),
                duration=float(row["duration"]) if row["duration"] else None,
                off_a=int(row["off_a"]),
                orph_a=int(row["orph_a"]),
                orph_pub_a=int(row["orph_pub_a"]),
                off_h=int(row["off_h"]),
                orph_h=int(row["orph_h"]),
                reward=float(row["reward"]),
            )
        )
    return out


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def summary_record(obj, **extra) -> dict:
    data = asdict(obj) if is_dataclass(obj) else dict(obj)
    data.pop("epochs", None)
    data.update(extra)
    return {k: _plain(v) for k, v in data.items()}


def write_jsonl(fh, records: Iterable[dict]) -> None:
    for rec in records:
        fh.write(json.dumps(rec, sort_keys=True, allow_nan=False) + "\n")


def summary_text(rec: dict) -> str:
    """One ``key=value`` line, keys sorted."""
    return " ".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in sorted(rec.items()))
