from scat_depth.surgery.base import BaseGradientCombiner
from scat_depth.surgery.buffer import GeneratorBuffer
from scat_depth.surgery.conflict import ConflictGradientSurgery
from scat_depth.surgery.factory import create_combiner
from scat_depth.surgery.flat import FlatGradient, cosine
from scat_depth.surgery.plain import PlainAdversarialSum
from scat_depth.surgery.stats import GRAD_STATS_HEADER, ConflictStats, record_stats


def surgery(g_clean: FlatGradient, g_adv_list, blend: float):
    """Conflict gradient surgery; returns (g_update, pre-surgery ConflictStats)."""
    return ConflictGradientSurgery().combine(g_clean, g_adv_list, blend)


__all__ = [
    "BaseGradientCombiner",
    "GeneratorBuffer",
    "ConflictGradientSurgery",
    "PlainAdversarialSum",
    "create_combiner",
    "FlatGradient",
    "cosine",
    "surgery",
    "GRAD_STATS_HEADER",
    "ConflictStats",
    "record_stats",
]
