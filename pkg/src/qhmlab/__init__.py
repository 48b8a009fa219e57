"""qhmlab: a stochastic nonconvex optimization lab around mini-batch
quasi-hyperbolic momentum, epoch-indexed schedulers, and convergence-bound
checks on synthetic finite-sum problems."""

from . import bounds, engine, harness, optim, problems, rng, schedules

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "engine",
    "harness",
    "optim",
    "problems",
    "rng",
    "schedules",
    "__version__",
]
