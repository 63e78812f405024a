import logging
from typing import List

import numpy as np

from scat_depth.surgery.base import BaseGradientCombiner
from scat_depth.surgery.flat import FlatGradient

logger = logging.getLogger(__name__)


class ConflictGradientSurgery(BaseGradientCombiner):
    """Projects each conflicting adversarial gradient off the clean gradient.

    An adversarial gradient g with g . g_clean < 0 is replaced by
    g - (g . g_clean / |g_clean|^2) g_clean; the others pass unchanged.
    """

    def _adjust(self, g_clean: FlatGradient, g_adv_list: List[FlatGradient]) -> List[FlatGradient]:
        clean = g_clean.values
        clean_sq = float(np.dot(clean, clean))
        if clean_sq == 0.0:
            if g_adv_list:
                logger.warning("Clean gradient is zero; combining raw adversarial gradients")
            return g_adv_list

        adjusted = []
        conflicts = 0
        for g in g_adv_list:
            dot = float(np.dot(g.values, clean))
            if dot < 0:
                conflicts += 1
                adjusted.append(g.with_values(g.values - (dot / clean_sq) * clean))
            else:
                adjusted.append(g)
        logger.debug(f"Gradient surgery: {conflicts}/{len(g_adv_list)} adversarial gradients projected")
        return adjusted
