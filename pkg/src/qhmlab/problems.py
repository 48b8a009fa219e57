"""Synthetic finite-sum objectives f(x) = (1/n) sum_i f_i(x) with analytic
constants, plus the seeded with-replacement mini-batch sampler.

Three families:

  noisy quadratic   f_i(x) = (1/2)(x - c_i)' A (x - c_i), A = diag(a),
                    spectrum in [1, kappa].  Smooth (L = kappa), exact noise
                    level sigma2, known minimizer (mean of the c_i).  Gradients
                    are globally unbounded, so G is undeclared.
  sigmoid sum       f_i(x) = sigmoid(a_i' x - t_i).  Nonconvex, non-negative,
                    with analytic global gradient bound G = max_i ||a_i|| / 4.
  logistic          binary logistic regression on separable-with-margin data;
                    G = max_i ||z_i||, L = max_i ||z_i||^2 / 4.

Sampling is i.i.d. uniform with replacement (an epoch is a bookkeeping unit
of steps, not a permutation of the data).  The index stream is the SplitMix64
integer path from :mod:`qhmlab.rng`: reproducible across runs, platforms, and
engine backends.

Batch gradients are the batch mean computed in a pinned order (sequential
accumulation over the drawn indices), matching the compiled kernels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng

_SIGMOID_D2_MAX = 1.0 / (6.0 * math.sqrt(3.0))  # sup |sigmoid''|


@dataclass(frozen=True)
class ProblemConstants:
    """Analytic constants where available; None means undeclared, never 0."""

    L: float | None = None
    G: float | None = None
    sigma2: float | None = None
    f_star: float | None = None


def _sigmoid(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


class FiniteSumProblem:
    """Base interface; concrete problems fill in the gradient oracles."""

    kind: str = "abstract"

    def __init__(self, n: int, dim: int, constants: ProblemConstants):
        self.n = int(n)
        self.dim = int(dim)
        self.constants = constants

    def loss(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def full_grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def per_sample_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def batch_grad(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def per_sample_grad_norms(self, x: np.ndarray) -> np.ndarray:
        """||grad f_i(x)|| for every component i (for empirical G probes)."""
        raise NotImplementedError


class QuadraticProblem(FiniteSumProblem):
    kind = "quadratic"

    def __init__(self, a: np.ndarray, c: np.ndarray):
        a = np.asarray(a, dtype=np.float64)
        c = np.asarray(c, dtype=np.float64)
        n, dim = c.shape
        self.a = a
        self.c = c
        self.c_bar = c.mean(axis=0)
        dev = c - self.c_bar
        self._coord_var = np.mean(dev**2, axis=0)
        sigma2 = float(np.mean(np.sum((dev * a) ** 2, axis=1)))
        f_star = 0.5 * float(np.dot(self.a, self._coord_var))
        super().__init__(
            n,
            dim,
            ProblemConstants(L=float(a.max()), G=None, sigma2=sigma2, f_star=f_star),
        )
        for arr in (self.a, self.c, self.c_bar, self._coord_var):
            arr.setflags(write=False)

    def loss(self, x):
        d = x - self.c_bar
        return 0.5 * float(np.dot(self.a, d * d + self._coord_var))

    def full_grad(self, x):
        return self.a * (x - self.c_bar)

    def per_sample_grad(self, i, x):
        return self.a * (x - self.c[i])

    def batch_grad(self, x, idx):
        s = np.add.reduce(self.c[idx], axis=0)
        return self.a * (x - s / len(idx))

    def per_sample_grad_norms(self, x):
        return np.linalg.norm(self.a * (x - self.c), axis=1)


class SigmoidSumProblem(FiniteSumProblem):
    kind = "sigmoid_sum"

    def __init__(self, A: np.ndarray, t: np.ndarray):
        A = np.asarray(A, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        n, dim = A.shape
        self.A = A
        self.t = t
        row_sq = np.sum(A**2, axis=1)
        super().__init__(
            n,
            dim,
            ProblemConstants(
                L=float(np.mean(row_sq)) * _SIGMOID_D2_MAX,
                G=float(np.sqrt(row_sq.max())) / 4.0,
                sigma2=float(np.mean(row_sq)) / 16.0,
                f_star=0.0,
            ),
        )
        for arr in (self.A, self.t):
            arr.setflags(write=False)

    def loss(self, x):
        return float(np.mean(_sigmoid(self.A @ x - self.t)))

    def full_grad(self, x):
        s = _sigmoid(self.A @ x - self.t)
        return ((s * (1.0 - s)) @ self.A) / self.n

    def per_sample_grad(self, i, x):
        s = _sigmoid(np.atleast_1d(self.A[i] @ x - self.t[i]))[0]
        return s * (1.0 - s) * self.A[i]

    def batch_grad(self, x, idx):
        Ai = self.A[idx]
        s = _sigmoid(Ai @ x - self.t[idx])
        w = s * (1.0 - s)
        return np.add.reduce(w[:, None] * Ai, axis=0) / len(idx)

    def per_sample_grad_norms(self, x):
        s = _sigmoid(self.A @ x - self.t)
        return s * (1.0 - s) * np.linalg.norm(self.A, axis=1)


class LogisticProblem(FiniteSumProblem):
    """f_i(x) = log(1 + exp(-x' u_i)) with u_i = y_i z_i folded in."""

    kind = "logistic"

    def __init__(self, U: np.ndarray):
        U = np.asarray(U, dtype=np.float64)
        n, dim = U.shape
        self.U = U
        row_norm = np.linalg.norm(U, axis=1)
        super().__init__(
            n,
            dim,
            ProblemConstants(
                L=float(row_norm.max() ** 2) / 4.0,
                G=float(row_norm.max()),
                sigma2=float(np.mean(row_norm**2)),
                f_star=0.0,
            ),
        )
        self.U.setflags(write=False)

    def loss(self, x):
        return float(np.mean(np.logaddexp(0.0, -(self.U @ x))))

    def full_grad(self, x):
        w = _sigmoid(-(self.U @ x))
        return -(w @ self.U) / self.n

    def per_sample_grad(self, i, x):
        w = _sigmoid(np.atleast_1d(-(self.U[i] @ x)))[0]
        return -w * self.U[i]

    def batch_grad(self, x, idx):
        Ui = self.U[idx]
        w = _sigmoid(-(Ui @ x))
        return -np.add.reduce(w[:, None] * Ui, axis=0) / len(idx)

    def per_sample_grad_norms(self, x):
        w = _sigmoid(-(self.U @ x))
        return w * np.linalg.norm(self.U, axis=1)


def make_noisy_quadratic(
    dim: int, n: int, seed: int, kappa: float = 10.0, spread: float = 1.0
) -> QuadraticProblem:
    """Diagonal quadratic with spectrum geomspaced in [1, kappa] and random
    per-component centers (spread=0 collapses them: zero-noise case)."""
    if dim < 1 or n < 2 or kappa < 1:
        raise ValueError("need dim >= 1, n >= 2, kappa >= 1")
    g = np.random.default_rng(seed)
    a = np.geomspace(1.0, kappa, dim) if dim > 1 else np.array([float(kappa)])
    c = spread * g.standard_normal((n, dim))
    return QuadraticProblem(a, c)


def make_sigmoid_sum(dim: int, n: int, seed: int, scale: float = 1.0) -> SigmoidSumProblem:
    """Sum of shifted sigmoids: smooth, nonconvex, globally bounded gradients."""
    if dim < 1 or n < 1:
        raise ValueError("need dim >= 1, n >= 1")
    g = np.random.default_rng(seed)
    A = scale * g.standard_normal((n, dim))
    t = g.standard_normal(n)
    return SigmoidSumProblem(A, t)


def make_logistic(dim: int, n: int, seed: int, margin: float = 0.1) -> LogisticProblem:
    """Binary logistic regression on synthetic separable-with-margin data."""
    if dim < 1 or n < 1:
        raise ValueError("need dim >= 1, n >= 1")
    g = np.random.default_rng(seed)
    w = g.standard_normal(dim)
    w /= np.linalg.norm(w)
    Z = g.standard_normal((n, dim))
    proj = Z @ w
    for _ in range(100):
        narrow = np.abs(proj) < margin
        if not narrow.any():
            break
        Z[narrow] = g.standard_normal((int(narrow.sum()), dim))
        proj = Z @ w
    y = np.where(proj >= 0, 1.0, -1.0)
    return LogisticProblem(y[:, None] * Z)


class BatchSampler:
    """Single-owner, reproducible stream of uniform indices over [0, n).

    One SplitMix64 draw per index; the underlying state is exposed so the
    compiled kernels can take over the stream and hand it back in sync.
    """

    def __init__(self, seed: int, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)
        self._state = seed & _rng.MASK64

    @property
    def state(self) -> int:
        return self._state

    @state.setter
    def state(self, value: int):
        self._state = value & _rng.MASK64

    def draw_indices(self, b: int) -> np.ndarray:
        if b < 1:
            raise ValueError("batch size must be >= 1")
        idx, self._state = _rng.index_block(self._state, self.n, b)
        return idx


def sample_batch_grad(
    problem: FiniteSumProblem, sampler: BatchSampler, x: np.ndarray, b: int
) -> np.ndarray:
    """Mini-batch gradient estimate (1/b) sum over b i.i.d. uniform draws.

    Advances the sampler by exactly b draws.
    """
    if b < 1:
        raise ValueError("batch size must be >= 1")
    if sampler.n != problem.n:
        raise ValueError("sampler population differs from problem size")
    idx = sampler.draw_indices(b)
    return problem.batch_grad(np.asarray(x, dtype=np.float64), idx)


def export_dataset(problem: FiniteSumProblem, path) -> None:
    """Dump the arrays defining a problem to CSV for inspection."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if problem.kind == "quadratic":
            w.writerow(["a_" + str(j) for j in range(problem.dim)])
            w.writerow([format(v, ".17g") for v in problem.a])
            w.writerow(["c_" + str(j) for j in range(problem.dim)])
            for row in problem.c:
                w.writerow([format(v, ".17g") for v in row])
        elif problem.kind == "sigmoid_sum":
            w.writerow(["a_" + str(j) for j in range(problem.dim)] + ["t"])
            for row, tv in zip(problem.A, problem.t):
                w.writerow([format(v, ".17g") for v in row] + [format(tv, ".17g")])
        elif problem.kind == "logistic":
            w.writerow(["u_" + str(j) for j in range(problem.dim)])
            for row in problem.U:
                w.writerow([format(v, ".17g") for v in row])
        else:
            raise ValueError(f"unknown problem kind {problem.kind!r}")
