from typing import Dict, Type

from scat_depth.renderers.base import BaseRenderer
from scat_depth.renderers.csv import CsvRenderer
from scat_depth.renderers.json import JsonRenderer
from scat_depth.renderers.markdown import MarkdownRenderer

RENDERERS: Dict[str, Type[BaseRenderer]] = {
    "csv": CsvRenderer,
    "markdown": MarkdownRenderer,
    "json": JsonRenderer,
}
OUTPUT_FORMATS = tuple(RENDERERS)


def create_renderer(output_format: str) -> BaseRenderer:
    """Renderer for ``output_format``; raises ValueError for unknown formats."""
    try:
        return RENDERERS[output_format]()
    except KeyError:
        raise ValueError(
            f"Unsupported output format: {output_format}. Available: {', '.join(OUTPUT_FORMATS)}"
        ) from None
