from __future__ import annotations

import csv
import io
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence


def fmt(value: Any) -> str:
    """Stable text for a CSV cell (same input, same bytes)."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


class CsvReport:
    """
    Buffered CSV with `#` comment lines in front.

    Nothing touches the filesystem until `write()`, so a failing command
    leaves no partial file behind.
    """

    def __init__(self, columns: Sequence[str]) -> None:
        self._columns = list(columns)
        self._header: list[str] = []
        self._footer: list[str] = []
        self._rows: list[list[str]] = []

    def comment(self, line: str) -> None:
        self._header.append(line)

    def footer(self, line: str) -> None:
        self._footer.append(line)

    def add(self, *values: Any) -> None:
        if len(values) != len(self._columns):
            raise ValueError(f"expected {len(self._columns)} values, got {len(values)}")
        self._rows.append([fmt(v) for v in values])

    def extend(self, rows: Iterable[Sequence[Any]]) -> None:
        for row in rows:
            self.add(*row)

    def render(self) -> str:
        buf = io.StringIO()
        for line in self._header:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self._columns)
        writer.writerows(self._rows)
        for line in self._footer:
            buf.write(f"# {line}\n")
        return buf.getvalue()

    def write(self, target: Path | None) -> None:
        text = self.render()
        if target is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")


def read_points_csv(path: Path) -> list[dict[str, str]]:
    """Rows of a CSV that may carry `#` comment lines."""
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.DictReader(lines))
