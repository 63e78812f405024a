from scat_depth.trainer.config import TrainConfig
from scat_depth.trainer.trainer import SCATTrainer

__all__ = ["SCATTrainer", "TrainConfig"]
