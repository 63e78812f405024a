import os

# BLAS pools read these once, when numpy is first imported
_threads = os.environ.get("SCAT_THREADS")
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    if _threads:
        os.environ[_var] = _threads
    else:
        os.environ.setdefault(_var, "1")

from scat_depth.errors import CheckpointError, ConfigError, DataError, NumericalAbort, SCATError  # noqa: E402
from scat_depth.geometry import CameraModel, DepthMap, PoseSE3  # noqa: E402
from scat_depth.trainer import SCATTrainer, TrainConfig  # noqa: E402
from scat_depth.types import FitResult, MetricsReport, ResultTable, StepReport  # noqa: E402

__version__ = "0.1.0"
__all__ = [
    "SCATTrainer",
    "TrainConfig",
    "CameraModel",
    "DepthMap",
    "PoseSE3",
    "FitResult",
    "MetricsReport",
    "ResultTable",
    "StepReport",
    "SCATError",
    "ConfigError",
    "DataError",
    "CheckpointError",
    "NumericalAbort",
]
