from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Objective:
    """A pure cost function over a box-bounded real vector space."""

    dim: int
    func: Callable
    lower: np.ndarray
    upper: np.ndarray
    name: str = "objective"
    # optional vectorised form: (n, dim) array -> (n,) costs
    batch: Optional[Callable] = None

    def __post_init__(self):
        lo = np.broadcast_to(np.asarray(self.lower, dtype=np.float64), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=np.float64), (self.dim,)).copy()
        if np.any(lo >= hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __call__(self, x):
        return float(self.func(np.asarray(x, dtype=np.float64)))

    def clip(self, x):
        return np.clip(x, self.lower, self.upper)

    def evaluate_many(self, xs, workers=1):
        """Costs of the rows of ``xs``, returned in row order."""
        xs = np.asarray(xs, dtype=np.float64).reshape(-1, self.dim)
        if self.batch is not None:
            return np.asarray(self.batch(xs), dtype=np.float64)
        if workers and workers > 1 and len(xs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return np.fromiter(pool.map(self, xs), dtype=np.float64, count=len(xs))
        return np.array([self(x) for x in xs], dtype=np.float64)
