"""Population metaheuristics over flat real vectors."""

from .aco import AcoConfig, AcoResult, aco_run
from .benchmarks import benchmarks, rastrigin, rosenbrock, sphere
from .ica import Empire, IcaConfig, IcaResult, IcaState, check_state, ica_init, ica_run, ica_step
from .objective import Objective

__all__ = [
    "AcoConfig", "AcoResult", "aco_run",
    "benchmarks", "rastrigin", "rosenbrock", "sphere",
    "Empire", "IcaConfig", "IcaResult", "IcaState", "check_state", "ica_init", "ica_run", "ica_step",
    "Objective",
]
