from typing import List

from scat_depth.surgery.base import BaseGradientCombiner
from scat_depth.surgery.flat import FlatGradient


class PlainAdversarialSum(BaseGradientCombiner):
    """Adds the mean adversarial gradient at full weight from the first step."""

    fixed_blend = 1.0

    def _adjust(self, g_clean: FlatGradient, g_adv_list: List[FlatGradient]) -> List[FlatGradient]:
        return g_adv_list
