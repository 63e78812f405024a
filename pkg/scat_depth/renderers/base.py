"""
Base renderer abstract class.
"""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from scat_depth.types import ResultTable


def format_cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class BaseRenderer(ABC):
    """Abstract base class for rendering result tables."""

    @abstractmethod
    def render(self, table: "ResultTable") -> str:
        """
        Render a result table to string.

        Args:
            table: ResultTable object to render

        Returns:
            Formatted string representation
        """
        raise NotImplementedError
