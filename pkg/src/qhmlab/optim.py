"""Mini-batch QHM update rule and its SGD/NSHB/SHB specializations.

The step functions are pure (state in, state out) and deliberately decoupled
from gradient computation: they consume a gradient vector, never a problem
handle, so equivalence tests can feed identical gradient streams to different
update rules.

QHM step (two-stage, kept exactly in this operation order so that gamma=1
reduces bit-exactly to NSHB and gamma=0 to SGD):

    d_k = (1 - beta) g + beta d_{k-1}        (d_{-1} = 0)
    m_k = (1 - gamma) g + gamma d_k
    x_{k+1} = x_k - alpha m_k

SHB uses the unnormalized buffer m_k = g + beta_hat m_{k-1} and is related to
NSHB by alpha_hat = alpha(1-beta), beta_hat = beta/(1-beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonFiniteGradientError(ValueError):
    """A gradient with NaN/inf components was passed to a step function."""


@dataclass(frozen=True)
class QhmState:
    """Optimizer iterate: parameters x, momentum buffer d_prev, step count k.

    For NSHB/SHB steps ``d_prev`` holds their momentum buffer m_{k-1}.
    """

    x: np.ndarray
    d_prev: np.ndarray
    k: int = 0

    def __post_init__(self):
        if self.x.shape != self.d_prev.shape:
            raise ValueError("x and d_prev must have identical shape")


@dataclass(frozen=True)
class StepHyper:
    """Per-step hyperparameters; b is bookkeeping only (the step never samples)."""

    alpha: float
    beta: float
    gamma: float
    b: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not 0 <= self.beta < 1:
            raise ValueError("beta must be in [0, 1)")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must be in [0, 1]")
        if self.b < 1:
            raise ValueError("b must be >= 1")


@dataclass(frozen=True)
class StepDiagnostics:
    m_norm: float
    d_norm: float


def init_state(x0: np.ndarray) -> QhmState:
    """Fresh state at k=0 with a zero momentum buffer (d_{-1} = 0)."""
    x0 = np.asarray(x0, dtype=np.float64)
    return QhmState(x=x0, d_prev=np.zeros_like(x0), k=0)


def _check_gradient(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != x.shape:
        raise ValueError(f"gradient shape {g.shape} != parameter shape {x.shape}")
    if not np.isfinite(g).all():
        bad = np.flatnonzero(~np.isfinite(g))[0]
        raise NonFiniteGradientError(
            f"non-finite gradient component at index {bad}: {g.flat[bad]!r}"
        )
    return g


def qhm_step(
    state: QhmState, g: np.ndarray, h: StepHyper
) -> tuple[QhmState, StepDiagnostics]:
    """One mini-batch QHM step on a precomputed stochastic gradient."""
    g = _check_gradient(g, state.x)
    d = (1.0 - h.beta) * g + h.beta * state.d_prev
    m = (1.0 - h.gamma) * g + h.gamma * d
    x = state.x - h.alpha * m
    diag = StepDiagnostics(
        m_norm=float(np.linalg.norm(m)), d_norm=float(np.linalg.norm(d))
    )
    return QhmState(x=x, d_prev=d, k=state.k + 1), diag


def sgd_step(state: QhmState, g: np.ndarray, alpha: float) -> QhmState:
    """Plain SGD step x' = x - alpha g (the gamma=0 member of the family)."""
    g = _check_gradient(g, state.x)
    return QhmState(x=state.x - alpha * g, d_prev=state.d_prev, k=state.k + 1)


def nshb_step(state: QhmState, g: np.ndarray, alpha: float, beta: float) -> QhmState:
    """NSHB step: m_k = (1-beta) g + beta m_{k-1}; x' = x - alpha m_k."""
    if not 0 <= beta <= 1:
        raise ValueError("beta must be in [0, 1]")
    g = _check_gradient(g, state.x)
    m = (1.0 - beta) * g + beta * state.d_prev
    return QhmState(x=state.x - alpha * m, d_prev=m, k=state.k + 1)


def shb_step(state: QhmState, g: np.ndarray, alpha: float, beta: float) -> QhmState:
    """SHB step: m_k = g + beta m_{k-1}; x' = x - alpha m_k (beta >= 0)."""
    if not beta >= 0:
        raise ValueError("beta must be >= 0")
    g = _check_gradient(g, state.x)
    m = g + beta * state.d_prev
    return QhmState(x=state.x - alpha * m, d_prev=m, k=state.k + 1)


def shb_from_nshb(alpha: float, beta: float) -> tuple[float, float]:
    """Coefficient-matching map NSHB -> SHB: (alpha(1-beta), beta/(1-beta)).

    This is the published conversion; it equates the per-step coefficients
    alpha*(weight on g) and alpha*(weight on the buffer) between the two
    update rules.  Note it is not trajectory-preserving, because the two
    algorithms carry differently normalized buffers; see
    :func:`shb_equivalent` for the map under which iterates coincide.
    """
    if not 0 <= beta < 1:
        raise ZeroDivisionError("beta must be in [0, 1) to convert to SHB")
    return alpha * (1.0 - beta), beta / (1.0 - beta)


def nshb_from_shb(alpha_hat: float, beta_hat: float) -> tuple[float, float]:
    """Inverse of :func:`shb_from_nshb`: (alpha(1+beta), beta/(1+beta))."""
    if not beta_hat >= 0:
        raise ValueError("beta_hat must be >= 0")
    return alpha_hat * (1.0 + beta_hat), beta_hat / (1.0 + beta_hat)


def shb_equivalent(alpha: float, beta: float) -> tuple[float, float]:
    """Trajectory-preserving map NSHB -> SHB: (alpha(1-beta), beta).

    Both rules collapse to x_{k+1} - x_k = -a g_k + b (x_k - x_{k-1}) with
    (a, b) = (alpha(1-beta), beta) for NSHB and (alpha_hat, beta_hat) for
    SHB, so iterates coincide exactly when the momentum coefficient is kept
    and only the learning rate is rescaled.
    """
    if not 0 <= beta < 1:
        raise ValueError("beta must be in [0, 1)")
    return alpha * (1.0 - beta), beta


def nshb_equivalent(alpha_hat: float, beta_hat: float) -> tuple[float, float]:
    """Inverse of :func:`shb_equivalent`: (alpha_hat/(1-beta_hat), beta_hat).

    Defined for beta_hat < 1; SHB runs with beta_hat >= 1 have no
    normalized counterpart.
    """
    if not 0 <= beta_hat < 1:
        raise ValueError("beta_hat must be in [0, 1) to have an NSHB partner")
    return alpha_hat / (1.0 - beta_hat), beta_hat


def combined_momentum(
    g: np.ndarray, d_prev: np.ndarray, beta: float, gamma: float
) -> np.ndarray:
    """Collapsed step direction (1 - gamma beta) g + gamma beta d_prev.

    Algebraically equal to the two-stage m_k; kept separate so the identity
    is testable rather than assumed.
    """
    gb = gamma * beta
    return (1.0 - gb) * np.asarray(g, dtype=np.float64) + gb * d_prev
