"""Local storage for result tables (sweeps, traces, reports)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

from ..errors import DomainError

SIGNIFICANT_DIGITS = 12


def get_results_dir(base_dir: Optional[Path] = None) -> Path:
    """Get or create the directory for result files."""
    if base_dir:
        results_dir = base_dir / ".bmw-secrecy-results"
    else:
        results_dir = Path.cwd() / ".bmw-secrecy-results"

    results_dir.mkdir(parents=True, exist_ok=True)
    return results_dir


def generate_result_name(prefix: str = "result") -> str:
    """Generate a unique result name with timestamp."""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return f"{prefix}_{timestamp}"


def format_value(value) -> str:
    """Render one CSV cell: 12 significant digits for floats, blanks for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, f".{SIGNIFICANT_DIGITS}g")
    return str(value)


@dataclass
class ResultTable:
    """Column names plus rows of raw values."""

    columns: list
    rows: list = field(default_factory=list)

    def add_row(self, values: Sequence) -> None:
        if len(values) != len(self.columns):
            raise DomainError(f"row has {len(values)} cells, table has {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buffer.getvalue()


def write_csv(table: ResultTable, path: Path) -> Path:
    """
    Write a result table as CSV.

    Args:
        table: Table to write
        path: Destination file; parent directories are created

    Returns:
        Path to the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(table.to_csv())
    return path


def read_csv(path: Path) -> ResultTable:
    """Load a CSV written by write_csv. Cells come back as strings."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Result file not found: {path}")
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        return ResultTable([])
    return ResultTable(rows[0], rows[1:])


def list_results(base_dir: Optional[Path] = None) -> list[dict]:
    """
    List saved result files, newest first.

    Args:
        base_dir: Base directory for result storage

    Returns:
        List of result info dicts
    """
    results_dir = get_results_dir(base_dir)

    results = []
    for path in sorted(results_dir.glob("*.csv"), key=lambda p: p.stat().st_mtime, reverse=True):
        stat = path.stat()
        results.append({
            "name": path.stem,
            "file": path.name,
            "size": stat.st_size,
            "modified": datetime.fromtimestamp(stat.st_mtime).isoformat(),
        })

    return results
