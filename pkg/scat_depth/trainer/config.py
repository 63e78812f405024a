import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Tuple

from scat_depth.photometric import LossWeights

OPTIMIZERS = ("sgd", "adam")
PERTURBATIONS = ("generator", "gaussian", "corruption")


@dataclass(frozen=True)
class TrainConfig:
    """Every knob of a training run; validated on construction."""

    epochs: int = 50
    batch_size: int = 4
    lr_theta: float = 1e-3
    lr_phi: float = 1e-4
    kappa: float = 0.7
    epsilon_m: float = 135.0
    buffer_capacity: int = 8
    sample_j: int = 3
    blend_warmup_fraction: float = 0.2
    alpha: float = 0.85
    smoothness_weight: float = 1e-3
    seed: int = 0
    enable_cgs: bool = True
    enable_sdn: bool = True
    enable_ada: bool = True
    min_reprojection: bool = False
    auto_mask: bool = False
    mix_batch: bool = False
    optimizer: str = "sgd"
    perturbation: str = "generator"
    # 0 snapshots the generator at every epoch end
    snapshot_every_steps: int = 0
    depth_widths: Tuple[int, ...] = (16, 32, 64, 128)
    pose_widths: Tuple[int, ...] = (16, 32, 64, 128)
    generator_widths: Tuple[int, ...] = (16, 32, 64)
    min_depth: float = 0.1
    max_depth: float = 100.0

    def __post_init__(self):
        if self.lr_theta <= 0 or self.lr_phi <= 0:
            raise ValueError(f"Learning rates must be > 0, got lr_theta={self.lr_theta}, lr_phi={self.lr_phi}")
        if self.epsilon_m < 0:
            raise ValueError(f"epsilon_m must be >= 0, got {self.epsilon_m}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError(f"Need epochs >= 0 and batch_size >= 1, got {self.epochs}, {self.batch_size}")
        if self.sample_j < 1 or self.buffer_capacity < 1:
            raise ValueError(
                f"Need sample_j >= 1 and buffer_capacity >= 1, got {self.sample_j}, {self.buffer_capacity}"
            )
        if not 0.0 <= self.blend_warmup_fraction <= 1.0:
            raise ValueError(f"blend_warmup_fraction must be in [0, 1], got {self.blend_warmup_fraction}")
        if self.snapshot_every_steps < 0:
            raise ValueError(f"snapshot_every_steps must be >= 0, got {self.snapshot_every_steps}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"Unknown optimizer: {self.optimizer}. Available: {list(OPTIMIZERS)}")
        if self.perturbation not in PERTURBATIONS:
            raise ValueError(f"Unknown perturbation: {self.perturbation}. Available: {list(PERTURBATIONS)}")
        for name in ("depth_widths", "pose_widths", "generator_widths"):
            widths = getattr(self, name)
            if not widths or any(w < 1 for w in widths):
                raise ValueError(f"{name} must be a non-empty tuple of positive ints, got {widths}")
        self.loss_weights()

    def loss_weights(self) -> LossWeights:
        return LossWeights(alpha=self.alpha, smoothness_weight=self.smoothness_weight)

    def replace(self, **changes: Any) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "TrainConfig":
        """Build from a mapping such as the ``training`` section of config.yml."""
        unknown = sorted(set(values) - set(cls.field_names()))
        if unknown:
            raise ValueError(f"Unknown training keys: {unknown}")
        kwargs = dict(values)
        for name in ("depth_widths", "pose_widths", "generator_widths"):
            if name in kwargs:
                kwargs[name] = tuple(int(w) for w in kwargs[name])
        return cls(**kwargs)
