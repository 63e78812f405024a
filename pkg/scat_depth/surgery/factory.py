from scat_depth.surgery.base import BaseGradientCombiner
from scat_depth.surgery.conflict import ConflictGradientSurgery
from scat_depth.surgery.plain import PlainAdversarialSum


def create_combiner(strategy: str) -> BaseGradientCombiner:
    if strategy == "cgs":
        return ConflictGradientSurgery()
    if strategy == "plain":
        return PlainAdversarialSum()
    raise ValueError(f"Unknown gradient combiner: {strategy}")
