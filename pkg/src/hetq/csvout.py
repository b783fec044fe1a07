"""Pinned CSV conventions: UTF-8, ``\\n`` line endings, header row, 9 significant digits."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".9g")
    return str(value)


class CsvWriter:
    """Row-at-a-time writer; use as a context manager."""

    def __init__(self, path, header: Sequence[str]):
        self._fh = open(path, "w", encoding="utf-8", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(header)

    def write(self, row: Iterable) -> None:
        self._w.writerow([fmt(v) for v in row])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, header: Sequence[str], rows: Iterable[Iterable]) -> Path:
    with CsvWriter(path, header) as w:
        for row in rows:
            w.write(row)
    return Path(path)
