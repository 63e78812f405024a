"""
Markdown renderer for result tables.
"""

from typing import TYPE_CHECKING, Any, Dict, List

from scat_depth.renderers.base import BaseRenderer, format_cell

if TYPE_CHECKING:
    from scat_depth.types import ResultTable


class MarkdownRenderer(BaseRenderer):
    """Renders result tables as a markdown pipe table."""

    def render(self, table: "ResultTable") -> str:
        """Render result table as markdown string."""
        lines = []

        # Header
        lines.append(f"# {table.title}")
        lines.append("")
        if table.wall_clock_sec:
            lines.append(f"**Wall Clock**: {table.wall_clock_sec:.3f} seconds")
        lines.append(f"**Rows**: {len(table.rows)}")
        lines.append("")

        if not table.rows:
            return "\n".join(lines)

        lines.append("| " + " | ".join(table.columns) + " |")
        lines.append("|" + "|".join("---" for _ in table.columns) + "|")
        for row in table.rows:
            lines.append(self._render_row(row, table.columns))

        return "\n".join(lines)

    def _render_row(self, row: Dict[str, Any], columns: List[str]) -> str:
        return "| " + " | ".join(format_cell(row.get(column, "")) for column in columns) + " |"
