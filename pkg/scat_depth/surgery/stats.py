import logging
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 20
GRAD_STATS_HEADER = ["iter", "mean_cos", "frac_neg"] + [f"bin_{i:02d}" for i in range(HISTOGRAM_BINS)]


@dataclass
class ConflictStats:
    """Cosines between each adversarial gradient and the clean gradient.

    ``cosines`` are measured before surgery; ``adjusted`` holds the same
    statistics for the gradients actually combined.
    """

    cosines: List[float] = field(default_factory=list)
    mean_cosine: float = 0.0
    fraction_negative: float = 0.0
    adjusted: Optional["ConflictStats"] = None

    @classmethod
    def from_cosines(cls, cosines: Sequence[float], adjusted: Optional["ConflictStats"] = None) -> "ConflictStats":
        values = [float(c) for c in cosines]
        if not values:
            return cls([], 0.0, 0.0, adjusted)
        arr = np.asarray(values)
        return cls(values, float(arr.mean()), float((arr < 0).mean()), adjusted)

    @property
    def effective(self) -> "ConflictStats":
        return self.adjusted if self.adjusted is not None else self

    def histogram(self, bins: int = HISTOGRAM_BINS) -> List[int]:
        counts, _ = np.histogram(np.asarray(self.cosines, dtype=np.float64), bins=bins, range=(-1.0, 1.0))
        return [int(c) for c in counts]


class StatsSink(Protocol):
    def append(self, row: List) -> None:
        ...


def stats_row(stats: ConflictStats, iteration: int) -> List:
    return [iteration, stats.mean_cosine, stats.fraction_negative] + stats.histogram()


def record_stats(stats: ConflictStats, sink: StatsSink, iteration: int) -> List:
    """Append (iteration, mean, fraction negative, 20 bin counts) to ``sink``."""
    row = stats_row(stats, iteration)
    sink.append(row)
    return row
