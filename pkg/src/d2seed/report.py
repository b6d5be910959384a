"""Delimited report files: `# key: value` header lines plus one CSV table.

One schema for every command:

    # d2seed-report: <kind>/1
    # <meta-key>: <value>           (insertion order preserved)
    col1,col2,...                   (stable column order)
    v1,v2,...

Reports are deterministic for a fixed seed except for timing values, which
by convention live only in columns/keys whose names end in `_s`. Readers can
use read_report below or any CSV tool with `#` treated as a comment prefix.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

SCHEMA_PREFIX = "d2seed-report"
SCHEMA_VERSION = 1


@dataclass
class Report:
    kind: str
    meta: dict[str, str]
    columns: list[str]
    rows: list[dict[str, str]]


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_report(kind: str, meta: dict, columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# {SCHEMA_PREFIX}: {kind}/{SCHEMA_VERSION}\n")
    for key, value in meta.items():
        buf.write(f"# {key}: {format_value(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(col, "")) for col in columns])
    return buf.getvalue()


def write_report(path: str, kind: str, meta: dict, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(kind, meta, columns, rows))


def strip_timing(report: Report) -> Report:
    """Copy of the report with wall-time fields removed.

    Timing lives only in names ending `_s`; everything left must be
    byte-for-byte reproducible for a fixed seed.
    """
    meta = {k: v for k, v in report.meta.items() if not k.endswith("_s")}
    columns = [c for c in report.columns if not c.endswith("_s")]
    rows = [{c: row.get(c, "") for c in columns} for row in report.rows]
    return Report(kind=report.kind, meta=meta, columns=columns, rows=rows)


def read_report(path: str) -> Report:
    meta: dict[str, str] = {}
    kind = ""
    table_lines: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                if key == SCHEMA_PREFIX:
                    kind = value.split("/")[0]
                else:
                    meta[key] = value
            elif line:
                table_lines.append(line)
    if not kind:
        raise ValueError(f"{path}: missing '# {SCHEMA_PREFIX}:' schema line")
    if not table_lines:
        raise ValueError(f"{path}: missing table")
    reader = csv.reader(table_lines)
    columns = next(reader)
    rows = [dict(zip(columns, row)) for row in reader]
    return Report(kind=kind, meta=meta, columns=columns, rows=rows)
