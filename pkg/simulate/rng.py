"""Per-trial random streams that do not depend on execution order."""

from dataclasses import dataclass

import numpy as np

from analytic.exceptions import DomainError


@dataclass(frozen=True)
class SeededRun:
    master_seed: int
    trial_index: int

    def __post_init__(self):
        if not (0 <= self.master_seed < 2 ** 64):
            raise DomainError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if not (0 <= self.trial_index < 2 ** 64):
            raise DomainError(f"trial_index must be a 64-bit unsigned integer, got {self.trial_index}")

    def generator(self) -> np.random.Generator:
        """Counter-based Philox stream whose 128-bit key is (master_seed, trial_index)"""
        key = np.array([self.master_seed, self.trial_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
