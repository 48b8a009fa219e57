"""Pure-numpy epoch kernel: the reference implementation the compiled
extension must agree with.

One call advances T optimizer steps at fixed hyperparameters, mutating x and
d in place and consuming exactly T*b index draws from the SplitMix64 stream.
The batch gradient is accumulated in draw order (np.add.reduce over axis 0 is
row-sequential), the same order the C kernel uses.
"""

from __future__ import annotations

import numpy as np

from .. import rng as _rng
from ..problems import _sigmoid

ALGO_QHM = 0
ALGO_SHB = 1


def _batch_grad(problem, x, idx, b):
    if problem.kind == "quadratic":
        s = np.add.reduce(problem.c[idx], axis=0)
        return problem.a * (x - s / b)
    if problem.kind == "sigmoid_sum":
        Ai = problem.A[idx]
        s = _sigmoid(Ai @ x - problem.t[idx])
        w = s * (1.0 - s)
        return np.add.reduce(w[:, None] * Ai, axis=0) / b
    if problem.kind == "logistic":
        Ui = problem.U[idx]
        w = _sigmoid(-(Ui @ x))
        return -np.add.reduce(w[:, None] * Ui, axis=0) / b
    raise ValueError(f"no kernel for problem kind {problem.kind!r}")


def run_epoch(
    problem,
    x: np.ndarray,
    d: np.ndarray,
    state: int,
    *,
    alpha: float,
    beta: float,
    gamma: float,
    b: int,
    T: int,
    algo: int = ALGO_QHM,
) -> tuple[int, float, float]:
    """Run T steps in place; returns (rng_state, max ||d||, max ||m||)."""
    max_d2 = 0.0
    max_m2 = 0.0
    for _ in range(T):
        idx, state = _rng.index_block(state, problem.n, b)
        g = _batch_grad(problem, x, idx, b)
        if algo == ALGO_QHM:
            d[:] = (1.0 - beta) * g + beta * d
            m = (1.0 - gamma) * g + gamma * d
        else:  # SHB: unnormalized buffer
            m = g + beta * d
            d[:] = m
        x[:] = x - alpha * m
        dd = float(d @ d)
        mm = float(m @ m)
        if dd > max_d2:
            max_d2 = dd
        if mm > max_m2:
            max_m2 = mm
    return state, float(np.sqrt(max_d2)), float(np.sqrt(max_m2))
