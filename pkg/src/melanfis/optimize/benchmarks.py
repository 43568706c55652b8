"""Standard test functions; each has global minimum 0."""

import numpy as np

from .objective import Objective


def sphere(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(x, x))


def rastrigin(x):
    x = np.asarray(x, dtype=np.float64)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


_BOUNDS = {
    "sphere": (sphere, -5.0, 5.0),
    "rastrigin": (rastrigin, -5.12, 5.12),
    "rosenbrock": (rosenbrock, -5.0, 10.0),
}


def benchmarks(dims=(2, 10)):
    """Named objectives ``"<function>-<dim>"`` for every function and dimension."""
    out = {}
    for name, (fn, lo, hi) in _BOUNDS.items():
        for d in dims:
            out[f"{name}-{d}"] = Objective(d, fn, lo, hi, name=f"{name}-{d}")
    return out
