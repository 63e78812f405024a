import logging
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np

from scat_depth.surgery.flat import FlatGradient, check_layouts, cosine
from scat_depth.surgery.stats import ConflictStats

logger = logging.getLogger(__name__)


class BaseGradientCombiner(ABC):
    """Merges the clean gradient with per-branch adversarial gradients."""

    fixed_blend: Optional[float] = None

    def combine(
        self, g_clean: FlatGradient, g_adv_list: Sequence[FlatGradient], blend: float
    ) -> Tuple[FlatGradient, ConflictStats]:
        if not 0.0 <= blend <= 1.0:
            raise ValueError(f"Blend weight must be in [0, 1], got {blend}")
        for g in g_adv_list:
            check_layouts(g_clean, g)

        raw_cosines = [cosine(g, g_clean) for g in g_adv_list]
        adjusted = self._adjust(g_clean, list(g_adv_list))
        stats = ConflictStats.from_cosines(
            raw_cosines,
            adjusted=ConflictStats.from_cosines([cosine(g, g_clean) for g in adjusted]),
        )

        blend = self.fixed_blend if self.fixed_blend is not None else blend
        if not adjusted or blend == 0.0:
            return g_clean.with_values(g_clean.values.copy()), stats

        total = np.zeros_like(g_clean.values)
        for g in adjusted:
            total = total + g.values
        update = g_clean.values + (blend / len(adjusted)) * total
        return g_clean.with_values(update), stats

    @abstractmethod
    def _adjust(self, g_clean: FlatGradient, g_adv_list: List[FlatGradient]) -> List[FlatGradient]:
        """Adversarial gradients as they enter the update."""
        raise NotImplementedError
