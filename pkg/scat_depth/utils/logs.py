"""CSV sinks for per-step training logs and gradient statistics."""

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence

logger = logging.getLogger(__name__)


class CsvLog:
    """Row sink that keeps rows in memory and mirrors them to a CSV file when a path is given."""

    def __init__(self, header: Sequence[str], path: Optional[Path] = None):
        self.header = list(header)
        self.rows: List[List] = []
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", newline="") as f:
                csv.writer(f, lineterminator="\n").writerow(self.header)

    def append(self, row: List) -> None:
        if len(row) != len(self.header):
            raise ValueError(f"Row has {len(row)} fields, header has {len(self.header)}")
        self.rows.append(list(row))
        if self.path is not None:
            with open(self.path, "a", newline="") as f:
                csv.writer(f, lineterminator="\n").writerow([repr(v) if isinstance(v, float) else v for v in row])

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> List:
        index = self.header.index(name)
        return [row[index] for row in self.rows]
