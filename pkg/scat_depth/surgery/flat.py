import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# name -> (offset, length, shape)
Layout = Dict[str, Tuple[int, int, Tuple[int, ...]]]


@dataclass
class FlatGradient:
    values: np.ndarray
    layout: Layout

    @classmethod
    def from_named(cls, grads: Mapping[str, np.ndarray], names: Iterable[str] = None) -> "FlatGradient":
        names = list(grads) if names is None else list(names)
        layout: Layout = {}
        pieces = []
        offset = 0
        for name in names:
            g = np.asarray(grads[name], dtype=np.float64)
            layout[name] = (offset, g.size, g.shape)
            pieces.append(g.reshape(-1))
            offset += g.size
        values = np.concatenate(pieces) if pieces else np.zeros(0)
        return cls(values, layout)

    def to_named(self) -> Dict[str, np.ndarray]:
        return {
            name: self.values[offset:offset + length].reshape(shape)
            for name, (offset, length, shape) in self.layout.items()
        }

    def subset(self, prefix: str) -> Dict[str, np.ndarray]:
        """Named gradients whose name starts with ``prefix``, with the prefix stripped."""
        return {name[len(prefix):]: g for name, g in self.to_named().items() if name.startswith(prefix)}

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def with_values(self, values: np.ndarray) -> "FlatGradient":
        return FlatGradient(values, self.layout)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


def check_layouts(a: FlatGradient, b: FlatGradient) -> None:
    if a.layout != b.layout:
        raise ValueError(
            f"Gradient layouts differ: {len(a.layout)} vs {len(b.layout)} tensors, "
            f"{a.values.size} vs {b.values.size} values"
        )


def cosine(a: FlatGradient, b: FlatGradient) -> float:
    """Cosine similarity; 0 (with a warning) when either gradient is zero."""
    check_layouts(a, b)
    norm_a, norm_b = a.norm(), b.norm()
    if norm_a == 0.0 or norm_b == 0.0:
        logger.warning("Cosine of a zero-norm gradient requested; reporting 0")
        return 0.0
    value = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    return min(1.0, max(-1.0, value))
