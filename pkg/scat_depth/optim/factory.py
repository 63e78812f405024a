from scat_depth.optim.adam import Adam
from scat_depth.optim.base import BaseOptimizer
from scat_depth.optim.sgd import SGD


def create_optimizer(name: str, lr: float, maximize: bool = False) -> BaseOptimizer:
    if name == "sgd":
        return SGD(lr, maximize=maximize)
    if name == "adam":
        return Adam(lr, maximize=maximize)
    raise ValueError(f"Unknown optimizer: {name}")
