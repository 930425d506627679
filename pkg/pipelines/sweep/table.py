"""Aggregated sweep results and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple

from pipelines.common.checksum import write_text_if_changed  # type: ignore[import]

COLUMNS: Tuple[str, ...] = ("sweep_value", "scheme", "mean_T", "std_T", "mean_iters", "n_ok", "n_fail")


@dataclass(frozen=True, slots=True)
class SweepRow:
    sweep_value: float
    scheme: str
    mean_T: float
    std_T: float
    mean_iters: float
    n_ok: int
    n_fail: int


@dataclass(frozen=True, slots=True)
class SweepTable:
    """Rows per (grid value, scheme) plus ``#`` header constants."""

    rows: Tuple[SweepRow, ...]
    header: Dict[str, str] = field(default_factory=dict)

    @property
    def n_fail(self) -> int:
        return sum(row.n_fail for row in self.rows)

    @property
    def n_ok(self) -> int:
        return sum(row.n_ok for row in self.rows)


def render_csv(table: SweepTable) -> str:
    if not table.rows:
        raise ValueError("Refusing to write an empty sweep table")
    buffer = io.StringIO()
    for key, value in table.header.items():
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in table.rows:
        writer.writerow(
            (
                repr(row.sweep_value),
                row.scheme,
                repr(row.mean_T),
                repr(row.std_T),
                repr(row.mean_iters),
                row.n_ok,
                row.n_fail,
            )
        )
    return buffer.getvalue()


def emit_csv(table: SweepTable, path: Path) -> bool:
    """Write the table to ``path``; returns ``False`` when the file already matched."""

    return write_text_if_changed(Path(path), render_csv(table))


def parse_csv(text: str) -> SweepTable:
    header: Dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = tuple(next(reader, ()))
    if columns != COLUMNS:
        raise ValueError(f"Unexpected sweep columns {columns!r}")
    rows = tuple(
        SweepRow(
            sweep_value=float(value),
            scheme=scheme,
            mean_T=float(mean_t),
            std_T=float(std_t),
            mean_iters=float(mean_iters),
            n_ok=int(n_ok),
            n_fail=int(n_fail),
        )
        for value, scheme, mean_t, std_t, mean_iters, n_ok, n_fail in reader
    )
    return SweepTable(rows=rows, header=header)
