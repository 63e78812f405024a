from scat_depth.optim.adam import Adam
from scat_depth.optim.base import BaseOptimizer
from scat_depth.optim.factory import create_optimizer
from scat_depth.optim.sgd import SGD

__all__ = ["Adam", "BaseOptimizer", "SGD", "create_optimizer"]
