"""
JSON renderer for result tables.
"""

import json
import math
from typing import TYPE_CHECKING, Any, Dict, List

from scat_depth.renderers.base import BaseRenderer

if TYPE_CHECKING:
    from scat_depth.types import ResultTable


def _strict(value: Any) -> Any:
    # NaN and infinities have no JSON spelling
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class JsonRenderer(BaseRenderer):
    """Renders result tables as strict JSON with rows keyed in column order."""

    def render(self, table: "ResultTable") -> str:
        rows: List[Dict[str, Any]] = [
            {column: _strict(row.get(column)) for column in table.columns} for row in table.rows
        ]
        payload = {**table.to_dict(), "rows": rows}
        return json.dumps(payload, indent=2, allow_nan=False)
