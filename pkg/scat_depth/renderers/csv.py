"""
CSV renderer for result tables.
"""

import csv
import io
from typing import TYPE_CHECKING

from scat_depth.renderers.base import BaseRenderer

if TYPE_CHECKING:
    from scat_depth.types import ResultTable


class CsvRenderer(BaseRenderer):
    """Renders rows as comma-separated values under a fixed header."""

    def render(self, table: "ResultTable") -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_plain(row.get(column, "")) for column in table.columns])
        return buffer.getvalue()


def _plain(value):
    # repr keeps floats exact for byte-identical reruns
    if isinstance(value, float):
        return repr(value)
    return value
