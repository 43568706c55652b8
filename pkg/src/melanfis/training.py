"""ANFIS trainers: ICA (primary), gradient descent and ACO_R baselines.

All three start from the same k-means-initialised model. The
metaheuristics search the flattened parameter vector inside fixed boxes
and seed their populations with that starting model.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import anfis
from .optimize import Objective, aco_run, ica_run

METHODS = {"ica": "ica_anfis", "gd": "gd_anfis", "aco": "aco_anfis"}
CENTER_BOUND = 3.0
SIGMA_MAX = 5.0
CONSEQUENT_BOUND = 10.0


def parameter_bounds(n_inputs, n_rules):
    k = n_inputs * n_rules
    n_cons = n_rules * (n_inputs + 1)
    lower = np.concatenate([np.full(k, -CENTER_BOUND), np.full(k, anfis.SIGMA_MIN),
                            np.full(n_cons, -CONSEQUENT_BOUND)])
    upper = np.concatenate([np.full(k, CENTER_BOUND), np.full(k, SIGMA_MAX),
                            np.full(n_cons, CONSEQUENT_BOUND)])
    return lower, upper


def anfis_objective(x, t, n_inputs, n_rules):
    """Training MSE as a function of the flat parameter vector."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    template = anfis.AnfisModel(np.zeros((n_rules, n_inputs)), np.ones((n_rules, n_inputs)),
                                np.zeros((n_rules, n_inputs + 1)))

    def cost(theta):
        return anfis.loss(template.with_params(theta), x, t)

    lower, upper = parameter_bounds(n_inputs, n_rules)
    return Objective(len(lower), cost, lower, upper, name="anfis-mse")


@dataclass
class TrainOutcome:
    method: str
    model: anfis.AnfisModel
    history: list


def method_name(optimizer):
    return METHODS.get(optimizer, optimizer)


def optimizer_key(method):
    for key, name in METHODS.items():
        if method in (key, name):
            return key
    raise ValueError(f"unknown training method {method!r}; choose from {sorted(METHODS.values())}")


def train(method, x, labels, cfg, seed, iterations=None):
    """Train an ANFIS classifier on standardized features.

    ``method`` is ``ica``/``gd``/``aco`` (or the ``*_anfis`` names);
    ``iterations`` overrides the configured budget.
    """
    key = optimizer_key(method)
    x = np.asarray(x, dtype=np.float64)
    t = anfis.encode_targets(labels)
    n_inputs = x.shape[1]
    init_seed = seed if cfg.anfis_seed is None else cfg.anfis_seed
    start = anfis.new_model(n_inputs, cfg.n_rules, x, labels, seed=init_seed)

    if key == "gd":
        iters = cfg.gd.iterations if iterations is None else iterations
        res = anfis.train_gradient(start, x, t, lr=cfg.gd.lr, iters=iters)
        return TrainOutcome(METHODS[key], res.model, res.history)

    obj = anfis_objective(x, t, n_inputs, cfg.n_rules)
    warm = obj.clip(start.flatten())
    if key == "ica":
        ica_cfg = dataclasses.replace(cfg.ica, seed=seed)
        if iterations is not None:
            ica_cfg = dataclasses.replace(ica_cfg, iterations=iterations)
        res = ica_run(obj, ica_cfg, initial=warm)
    else:
        aco_cfg = dataclasses.replace(cfg.aco, seed=seed)
        if iterations is not None:
            aco_cfg = dataclasses.replace(aco_cfg, iterations=iterations)
        res = aco_run(obj, aco_cfg, initial=warm)
    return TrainOutcome(METHODS[key], start.with_params(res.best_position), res.history)
