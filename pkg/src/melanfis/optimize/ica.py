"""Imperialist competitive algorithm (ICA).

Countries are candidate vectors. The lowest-cost ones start as
imperialists and the rest are handed out as colonies. Each iteration
colonies assimilate toward their imperialist, some undergo revolution,
the best colony may take over its empire, and the weakest empire loses a
colony to a stronger one until only one empire is left.

Every country owns an independent random stream so results do not depend
on the order in which costs are evaluated.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class IcaConfig:
    population: int = 200
    n_empires: int = 5
    iterations: int = 200
    revolution_rate: float = 0.1
    beta: float = 2.0
    xi: float = 0.1
    revolution_fraction: float = 0.3
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 1 <= self.n_empires < self.population:
            raise ValueError(
                f"need 1 <= n_empires < population, got {self.n_empires} and {self.population}")
        if not 0.0 <= self.revolution_rate <= 1.0:
            raise ValueError("revolution_rate must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.revolution_fraction <= 1.0:
            raise ValueError("revolution_fraction must lie in (0, 1]")


@dataclass
class Empire:
    imperialist: int
    colonies: List[int]
    total_power: float = 0.0


@dataclass
class IcaState:
    positions: np.ndarray
    costs: np.ndarray
    empires: List[Empire]
    rng_streams: list
    rng: np.random.Generator
    iteration: int = 0
    best_position: Optional[np.ndarray] = None
    best_cost: float = np.inf
    history: list = field(default_factory=list)

    @property
    def population(self):
        return len(self.costs)


def _total_power(state, empire, xi):
    cost = state.costs[empire.imperialist]
    if empire.colonies:
        cost += xi * float(np.mean(state.costs[empire.colonies]))
    return float(cost)


def _refresh_power(state, cfg):
    for emp in state.empires:
        emp.total_power = _total_power(state, emp, cfg.xi)


def _track_best(state):
    i = int(np.argmin(state.costs))
    if state.costs[i] < state.best_cost:
        state.best_cost = float(state.costs[i])
        state.best_position = state.positions[i].copy()
    state.history.append(state.best_cost)


def colony_counts(imperialist_costs, n_colonies):
    """Colonies per empire, proportional to ``max_cost - cost``.

    Rounding surplus is taken from the weakest empires, deficit goes to the
    strongest (index 0). Equal costs split evenly.
    """
    c = np.asarray(imperialist_costs, dtype=np.float64)
    power = c.max() - c
    if power.sum() > 0:
        share = power / power.sum()
    else:
        share = np.full(len(c), 1.0 / len(c))
    counts = np.round(share * n_colonies).astype(int)
    diff = n_colonies - int(counts.sum())
    if diff > 0:
        counts[0] += diff
    k = len(counts) - 1
    while diff < 0:
        if counts[k] > 0:
            counts[k] -= 1
            diff += 1
        else:
            k -= 1
    return counts


def ica_init(obj, cfg, initial=None):
    """Random initial countries and empires.

    ``initial`` optionally supplies positions (rows) that replace the first
    countries, e.g. a warm-start solution.
    """
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.population + 1)
    rng = np.random.default_rng(seeds[0])
    streams = [np.random.default_rng(s) for s in seeds[1:]]
    span = obj.upper - obj.lower
    positions = np.array([obj.lower + span * g.random(obj.dim) for g in streams])
    if initial is not None:
        init = np.asarray(initial, dtype=np.float64).reshape(-1, obj.dim)
        positions[:len(init)] = obj.clip(init)
    costs = obj.evaluate_many(positions, workers=cfg.workers)

    order = np.argsort(costs, kind="stable")
    imperialists = order[:cfg.n_empires]
    colonies = order[cfg.n_empires:]
    counts = colony_counts(costs[imperialists], len(colonies))
    colonies = colonies[rng.permutation(len(colonies))]
    empires, start = [], 0
    for imp, n in zip(imperialists, counts):
        empires.append(Empire(int(imp), [int(c) for c in colonies[start:start + n]]))
        start += n

    state = IcaState(positions, costs, empires, streams, rng)
    _refresh_power(state, cfg)
    _track_best(state)
    return state


def _assimilate_and_revolt(state, obj, cfg):
    n_rev = max(1, int(round(cfg.revolution_fraction * obj.dim)))
    moved = []
    for emp in state.empires:
        imp = state.positions[emp.imperialist]
        for c in emp.colonies:
            g = state.rng_streams[c]
            x = state.positions[c]
            u = g.random(obj.dim)
            x = obj.clip(x + cfg.beta * u * (imp - x))
            # the coin is always drawn so each stream advances identically
            if g.random() < cfg.revolution_rate:
                idx = g.choice(obj.dim, size=n_rev, replace=False)
                x[idx] = obj.lower[idx] + (obj.upper[idx] - obj.lower[idx]) * g.random(n_rev)
            state.positions[c] = x
            moved.append(c)
    return moved


def _swap(state):
    for emp in state.empires:
        if not emp.colonies:
            continue
        col_costs = state.costs[emp.colonies]
        k = int(np.argmin(col_costs))
        if col_costs[k] < state.costs[emp.imperialist]:
            emp.colonies[k], emp.imperialist = emp.imperialist, emp.colonies[k]


def _compete(state, cfg):
    """Weakest empire cedes its weakest colony; returns the winning empire."""
    if len(state.empires) < 2:
        return None
    _refresh_power(state, cfg)
    power = np.array([e.total_power for e in state.empires])
    weakest = int(np.argmax(power))
    candidates = [i for i in range(len(state.empires)) if i != weakest]
    gap = power.max() - power[candidates]
    p = gap / gap.sum() if gap.sum() > 0 else np.full(len(candidates), 1.0 / len(candidates))
    winner = state.empires[candidates[int(state.rng.choice(len(candidates), p=p))]]
    loser = state.empires[weakest]
    if loser.colonies:
        k = int(np.argmax(state.costs[loser.colonies]))
        winner.colonies.append(loser.colonies.pop(k))
    return winner


def _eliminate(state, winner):
    if winner is None:
        return
    survivors = []
    for emp in state.empires:
        if emp.colonies or emp is winner:
            survivors.append(emp)
        else:
            winner.colonies.append(emp.imperialist)
    state.empires = survivors


def ica_step(state, obj, cfg):
    """One assimilation / revolution / swap / competition / elimination round."""
    moved = _assimilate_and_revolt(state, obj, cfg)
    if moved:
        state.costs[moved] = obj.evaluate_many(state.positions[moved], workers=cfg.workers)
    _swap(state)
    winner = _compete(state, cfg)
    _eliminate(state, winner)
    _refresh_power(state, cfg)
    state.iteration += 1
    _track_best(state)
    return state


def check_state(state, obj=None):
    """Raise AssertionError if the empire partition or bounds are violated."""
    members = []
    for emp in state.empires:
        members.append(emp.imperialist)
        members.extend(emp.colonies)
    assert sorted(members) == list(range(state.population)), "countries are not partitioned"
    assert len(state.empires) >= 1, "no empire left"
    if obj is not None:
        assert np.all(state.positions >= obj.lower) and np.all(state.positions <= obj.upper)


@dataclass
class IcaResult:
    best_position: np.ndarray
    best_cost: float
    history: list
    state: IcaState


def ica_run(obj, cfg, initial=None, callback=None):
    """Run ``cfg.iterations`` ICA steps.

    ``history`` has ``iterations + 1`` entries (initial population first)
    and never increases.
    """
    state = ica_init(obj, cfg, initial)
    for _ in range(cfg.iterations):
        ica_step(state, obj, cfg)
        if callback is not None:
            callback(state)
    return IcaResult(state.best_position.copy(), state.best_cost, list(state.history), state)
