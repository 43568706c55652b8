"""Continuous ant colony optimisation (ACO_R).

A cost-ranked archive of solutions acts as the pheromone model: each ant
draws every coordinate from a Gaussian mixture centred on archive entries,
with rank-based mixture weights and spreads proportional to the mean
distance between archive entries.
"""

from dataclasses import dataclass, field

import numpy as np

SIGMA_FLOOR = 1e-12


@dataclass
class AcoConfig:
    n_ants: int = 20
    iterations: int = 200
    archive_size: int = 50
    q: float = 0.5
    xi_aco: float = 0.85
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_ants < 1:
            raise ValueError("n_ants must be >= 1")
        if self.archive_size < self.n_ants:
            raise ValueError("archive_size must be >= n_ants")
        if self.q <= 0 or self.xi_aco <= 0:
            raise ValueError("q and xi_aco must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


@dataclass
class AcoResult:
    best_position: np.ndarray
    best_cost: float
    history: list
    archive: np.ndarray
    archive_costs: np.ndarray
    # archive costs after every iteration, for ordering checks
    snapshots: list = field(default_factory=list, repr=False)


def rank_weights(k, q):
    ranks = np.arange(k, dtype=np.float64)
    w = np.exp(-(ranks ** 2) / (2.0 * q * q * k * k))
    return w / w.sum()


def kernel_spreads(archive, xi):
    """Per-entry, per-coordinate std: xi * mean |s_e - s_l| over other entries."""
    k = archive.shape[0]
    if k == 1:
        return np.full_like(archive, SIGMA_FLOOR)
    dist = np.abs(archive[:, None, :] - archive[None, :, :]).sum(axis=0) / (k - 1)
    return np.maximum(xi * dist, SIGMA_FLOOR)


def _merge(archive, costs, new, new_costs, k):
    pool = np.vstack([archive, new])
    pool_costs = np.concatenate([costs, new_costs])
    # stable sort keeps incumbents ahead of equally good newcomers
    order = np.argsort(pool_costs, kind="stable")[:k]
    return pool[order], pool_costs[order]


def aco_run(obj, cfg, initial=None, keep_snapshots=False):
    rng = np.random.default_rng(cfg.seed)
    k = cfg.archive_size
    archive = obj.lower + (obj.upper - obj.lower) * rng.random((k, obj.dim))
    if initial is not None:
        init = np.asarray(initial, dtype=np.float64).reshape(-1, obj.dim)
        archive[:len(init)] = obj.clip(init)
    costs = obj.evaluate_many(archive, workers=cfg.workers)
    order = np.argsort(costs, kind="stable")
    archive, costs = archive[order], costs[order]
    weights = rank_weights(k, cfg.q)

    history = [float(costs[0])]
    snapshots = [costs.copy()] if keep_snapshots else []
    cols = np.arange(obj.dim)
    for _ in range(cfg.iterations):
        sigma = kernel_spreads(archive, cfg.xi_aco)
        pick = rng.choice(k, size=(cfg.n_ants, obj.dim), p=weights)
        mean = archive[pick, cols]
        std = sigma[pick, cols]
        ants = obj.clip(mean + std * rng.standard_normal((cfg.n_ants, obj.dim)))
        ant_costs = obj.evaluate_many(ants, workers=cfg.workers)
        archive, costs = _merge(archive, costs, ants, ant_costs, k)
        history.append(float(costs[0]))
        if keep_snapshots:
            snapshots.append(costs.copy())
    return AcoResult(archive[0].copy(), float(costs[0]), history, archive, costs, snapshots)
