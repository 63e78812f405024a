import logging
import threading
from collections import deque
from typing import Any, Deque, Dict, List

import numpy as np

from scat_depth.networks.generator import PerturbationGenerator

logger = logging.getLogger(__name__)


class GeneratorBuffer:
    """Bounded history of frozen generator snapshots, evicting oldest first."""

    def __init__(self, capacity: int = 8, rng_seed: int = 0):
        if capacity < 1:
            raise ValueError(f"Buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.rng_seed = rng_seed
        self.snapshots: Deque[PerturbationGenerator] = deque(maxlen=capacity)
        self._rng = np.random.default_rng(rng_seed)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.snapshots)

    def add(self, snapshot: PerturbationGenerator) -> None:
        with self._lock:
            if len(self.snapshots) == self.capacity:
                evicted = self.snapshots[0]
                logger.debug(f"Buffer full; evicting generator v{evicted.version_tag}")
            self.snapshots.append(snapshot)

    def sample(self, j: int) -> List[PerturbationGenerator]:
        """Up to ``j`` distinct snapshots, uniformly without replacement."""
        if j < 1:
            raise ValueError(f"Sample size must be >= 1, got {j}")
        with self._lock:
            if not self.snapshots:
                return []
            count = min(j, len(self.snapshots))
            picks = self._rng.choice(len(self.snapshots), size=count, replace=False)
            return [self.snapshots[int(i)] for i in picks]

    def version_tags(self) -> List[int]:
        return [s.version_tag for s in self.snapshots]

    def rng_state(self) -> Dict[str, Any]:
        return self._rng.bit_generator.state

    def set_rng_state(self, state: Dict[str, Any]) -> None:
        self._rng.bit_generator.state = state
