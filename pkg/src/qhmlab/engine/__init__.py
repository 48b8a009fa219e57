"""Engine selection: compiled kernels when available, numpy fallback otherwise.

Set QHMLAB_PURE=1 to force the pure-Python engine.  Both engines consume the
same SplitMix64 index stream bit-for-bit; trajectories agree to floating-point
rounding (exactly, for the quadratic problem).
"""

from __future__ import annotations

import importlib
import os

import numpy as np

from . import fallback

_accel = None
if os.environ.get("QHMLAB_PURE", "") in ("", "0"):
    try:
        _accel = importlib.import_module("._accel", __name__)
    except ImportError:
        _accel = None

ACTIVE = "accel" if _accel is not None else "pure"

ALGO_QHM = fallback.ALGO_QHM
ALGO_SHB = fallback.ALGO_SHB


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
    """Advance T steps at fixed hyperparameters, mutating x and d in place.

    Returns the advanced sampler state and the epoch maxima of ||d_k|| and
    ||m_k||.
    """
    if _accel is not None:
        if problem.kind == "quadratic":
            return _accel.run_epoch_quadratic(
                x, d, state, problem.a, problem.c, b, T, alpha, beta, gamma, algo
            )
        if problem.kind == "sigmoid_sum":
            return _accel.run_epoch_sigmoid(
                x, d, state, problem.A, problem.t, b, T, alpha, beta, gamma, algo
            )
        if problem.kind == "logistic":
            return _accel.run_epoch_logistic(
                x, d, state, problem.U, b, T, alpha, beta, gamma, algo
            )
        raise ValueError(f"no kernel for problem kind {problem.kind!r}")
    return fallback.run_epoch(
        problem, x, d, state, alpha=alpha, beta=beta, gamma=gamma, b=b, T=T, algo=algo
    )
