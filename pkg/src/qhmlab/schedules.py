"""Epoch-indexed hyperparameter schedulers and their per-step expansion.

Every scheduler is a closed-form function of the epoch index m (never an
incremental accumulation), evaluated by :func:`eval_epoch` and expanded to
per-step arrays by :func:`expand`.  An epoch m comprises T_m = ceil(n / b_m)
optimizer steps; all four hyperparameters are constant within an epoch.

Kinds per target:

  batch: constant            b_m = b
         exponential_bs      b_m = b0 * delta^floor(m/E)
  lr:    constant            a_m = alpha_max
         decaying_sq_lr      a_m = alpha_max / sqrt(m+1)
         decaying_lr         a_m = alpha_max / (m+1)
         cosine_lr           a_m = alpha_min + (alpha_max-alpha_min)/2 * (1 + cos(m*pi/(M-1)))
         polynomial_lr       a_m = alpha_min + (alpha_max-alpha_min) * (1 - m/M)^p
         hybrid_cosine_lr    cosine up to epoch M_switch-1, then decaying_sq
         hybrid_polynomial_lr  same with a polynomial head
  beta:  constant            beta_m = beta_max
         step_decay          beta_m = beta_max * zeta^floor(m/E)
         increasing_beta     beta_m = 1 - (1-beta_min) / (m+1)^(3/4)
  gamma: constant            gamma_m = gamma_max
         step_decay          gamma_m = gamma_max * lambda^floor(m/E)

The hybrid kinds exist for asymptotic classification (a cosine/polynomial
schedule is only defined up to its own horizon); they are not harness
defaults.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

logger = logging.getLogger(__name__)

TARGETS = ("batch", "lr", "beta", "gamma")

KINDS_BY_TARGET = {
    "batch": ("constant", "exponential_bs"),
    "lr": (
        "constant",
        "decaying_sq_lr",
        "decaying_lr",
        "cosine_lr",
        "polynomial_lr",
        "hybrid_cosine_lr",
        "hybrid_polynomial_lr",
    ),
    "beta": ("constant", "step_decay", "increasing_beta"),
    "gamma": ("constant", "step_decay"),
}

# required parameter names per (target, kind)
_PARAMS = {
    ("batch", "constant"): ("b",),
    ("batch", "exponential_bs"): ("b0", "delta", "E"),
    ("lr", "constant"): ("alpha_max",),
    ("lr", "decaying_sq_lr"): ("alpha_max",),
    ("lr", "decaying_lr"): ("alpha_max",),
    ("lr", "cosine_lr"): ("alpha_max", "alpha_min"),
    ("lr", "polynomial_lr"): ("alpha_max", "alpha_min", "p"),
    ("lr", "hybrid_cosine_lr"): ("alpha_max", "alpha_min", "M_switch"),
    ("lr", "hybrid_polynomial_lr"): ("alpha_max", "alpha_min", "p", "M_switch"),
    ("beta", "constant"): ("beta_max",),
    ("beta", "step_decay"): ("beta_max", "zeta", "E"),
    ("beta", "increasing_beta"): ("beta_min",),
    ("gamma", "constant"): ("gamma_max",),
    ("gamma", "step_decay"): ("gamma_max", "lambda", "E"),
}


class ScheduleError(ValueError):
    """Invalid scheduler specification."""


class EpochRangeError(IndexError):
    """Epoch index outside [0, M-1]."""


class PlanError(ValueError):
    """Expansion produced values outside the optimizer's admissible ranges."""


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


@dataclass(frozen=True)
class ScheduleSpec:
    """Declarative description of one scheduler: target + kind + parameters."""

    target: str
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ScheduleError(f"unknown target {self.target!r}")
        if self.kind not in KINDS_BY_TARGET[self.target]:
            raise ScheduleError(
                f"kind {self.kind!r} is not valid for target {self.target!r}"
            )
        wanted = _PARAMS[(self.target, self.kind)]
        missing = [k for k in wanted if k not in self.params]
        extra = [k for k in self.params if k not in wanted]
        if missing or extra:
            raise ScheduleError(
                f"{self.target}/{self.kind}: missing params {missing}, unexpected {extra}"
            )
        object.__setattr__(self, "params", dict(self.params))
        self._check_ranges()

    def _check_ranges(self):
        p = self.params
        if self.kind == "constant" and self.target == "batch":
            if not _is_int(p["b"]) or p["b"] < 1:
                raise ScheduleError("b must be an integer >= 1")
        elif self.kind == "exponential_bs":
            if not _is_int(p["b0"]) or p["b0"] < 1:
                raise ScheduleError("b0 must be an integer >= 1")
            if not p["delta"] > 1:
                raise ScheduleError("delta must be > 1")
            if not _is_int(p["E"]) or p["E"] < 1:
                raise ScheduleError("E must be an integer >= 1")
        elif self.target == "lr":
            amax = p["alpha_max"]
            amin = p.get("alpha_min", 0.0)
            if not amax > 0:
                raise ScheduleError("alpha_max must be > 0")
            if not 0 <= amin <= amax:
                raise ScheduleError("need 0 <= alpha_min <= alpha_max")
            if "p" in p and not p["p"] > 0:
                raise ScheduleError("p must be > 0")
            if "M_switch" in p and (not _is_int(p["M_switch"]) or p["M_switch"] < 1):
                raise ScheduleError("M_switch must be an integer >= 1")
        elif self.target == "beta":
            if self.kind == "increasing_beta":
                if not 0 <= p["beta_min"] < 1:
                    raise ScheduleError("beta_min must be in [0, 1)")
            else:
                if not 0 <= p["beta_max"] < 1:
                    raise ScheduleError("beta_max must be in [0, 1)")
                if self.kind == "step_decay" and not p["zeta"] > 0:
                    raise ScheduleError("zeta must be > 0")
                if self.kind == "step_decay" and (
                    not _is_int(p["E"]) or p["E"] < 1
                ):
                    raise ScheduleError("E must be an integer >= 1")
        elif self.target == "gamma":
            if not 0 <= p["gamma_max"] <= 1:
                raise ScheduleError("gamma_max must be in [0, 1]")
            if self.kind == "step_decay":
                if not p["lambda"] > 0:
                    raise ScheduleError("lambda must be > 0")
                if not _is_int(p["E"]) or p["E"] < 1:
                    raise ScheduleError("E must be an integer >= 1")


def constant_spec(target: str, value) -> ScheduleSpec:
    """Convenience constructor for a constant schedule of any target."""
    key = {"batch": "b", "lr": "alpha_max", "beta": "beta_max", "gamma": "gamma_max"}
    return ScheduleSpec(target, "constant", {key[target]: value})


def _eval_batch_epoch(spec: ScheduleSpec, m: int) -> int:
    p = spec.params
    if spec.kind == "constant":
        return int(p["b"])
    j = m // int(p["E"])
    delta = p["delta"]
    b0 = int(p["b0"])
    if j * math.log(delta) + math.log(b0) > 708.0:
        # beyond float range the only roles of b are "larger than n" and
        # "1/b ~ 0"; avoid huge exact integers
        return int(8.9e307)
    if float(delta).is_integer():
        return b0 * int(delta) ** j  # exact for integral ratios
    return max(1, round(b0 * delta**j))


def _eval_float_epochs(spec: ScheduleSpec, ms: np.ndarray, M: int) -> np.ndarray:
    """Vectorized lr/beta/gamma values at epoch indices ``ms`` (one code path
    for scalar and array evaluation, so expansion is bit-consistent with
    eval_epoch)."""
    p = spec.params
    kind = spec.kind
    mf = ms.astype(np.float64)
    if spec.target == "lr":
        amax = p["alpha_max"]
        if kind == "constant":
            return np.full(ms.shape, float(amax))
        if kind == "decaying_sq_lr":
            return amax / np.sqrt(mf + 1.0)
        if kind == "decaying_lr":
            return amax / (mf + 1.0)
        if kind in ("hybrid_cosine_lr", "hybrid_polynomial_lr"):
            msw = int(p["M_switch"])
            inner = "cosine_lr" if kind == "hybrid_cosine_lr" else "polynomial_lr"
            head = {k: v for k, v in p.items() if k != "M_switch"}
            head_spec = ScheduleSpec("lr", inner, head)
            out = np.empty(ms.shape)
            pre = ms < msw
            out[pre] = _eval_float_epochs(head_spec, ms[pre], msw)
            out[~pre] = amax / np.sqrt(mf[~pre] + 1.0)
            return out
        amin = p["alpha_min"]
        if kind == "cosine_lr":
            if M == 1:
                return np.full(ms.shape, float(amax))
            return amin + (amax - amin) / 2.0 * (1.0 + np.cos(mf * np.pi / (M - 1)))
        return amin + (amax - amin) * (1.0 - mf / M) ** p["p"]
    if spec.target == "beta":
        if kind == "constant":
            return np.full(ms.shape, float(p["beta_max"]))
        if kind == "step_decay":
            with np.errstate(under="ignore"):
                return p["beta_max"] * p["zeta"] ** (ms // int(p["E"])).astype(np.float64)
        return 1.0 - (1.0 - p["beta_min"]) / (mf + 1.0) ** 0.75
    if spec.target == "gamma":
        if kind == "constant":
            return np.full(ms.shape, float(p["gamma_max"]))
        with np.errstate(under="ignore"):
            return p["gamma_max"] * p["lambda"] ** (ms // int(p["E"])).astype(np.float64)
    raise AssertionError("unreachable")


def eval_epoch(spec: ScheduleSpec, m: int, M: int):
    """Closed-form scheduler value at epoch m of an M-epoch run.

    Returns an int for batch targets, a float otherwise.
    """
    if not _is_int(M) or M < 1:
        raise ScheduleError("M must be an integer >= 1")
    if not _is_int(m) or not 0 <= m <= M - 1:
        raise EpochRangeError(f"epoch {m} outside [0, {M - 1}]")
    if spec.target == "batch":
        return _eval_batch_epoch(spec, m)
    return float(_eval_float_epochs(spec, np.array([m], dtype=np.int64), M)[0])


@dataclass(frozen=True)
class StepPlan:
    """Fully expanded per-step hyperparameter arrays for a K-step run.

    ``batch`` holds integral values in a float64 array so that unclamped
    geometric growth beyond 2^63 stays representable; every clamped (harness)
    plan is exact.  Arrays are read-only.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    batch: np.ndarray
    epoch_of_step: np.ndarray
    T: np.ndarray
    K: int
    M: int
    n: int
    batch_clamped: bool = False

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "batch", "epoch_of_step", "T"):
            getattr(self, name).setflags(write=False)

    def epoch_value(self, arr_name: str, m: int):
        """Value of a per-step array on epoch m (constant within the epoch)."""
        start = int(np.sum(self.T[:m]))
        return getattr(self, arr_name)[start]


def expand(
    specs: Mapping[str, ScheduleSpec],
    n: int,
    M: int,
    *,
    clamp_batch: bool = True,
) -> StepPlan:
    """Expand epoch-indexed specs into a per-step :class:`StepPlan`.

    ``specs`` maps each of "batch", "lr", "beta", "gamma" to its spec.  When
    ``clamp_batch`` is set, epoch batch sizes above n are clamped to n (full
    batch) and logged; bound evaluation passes ``clamp_batch=False`` to keep
    the pure geometric schedule the corollaries assume.
    """
    if not _is_int(n) or n < 1:
        raise ScheduleError("n must be an integer >= 1")
    if not _is_int(M) or M < 1:
        raise ScheduleError("M must be an integer >= 1")
    missing = [t for t in TARGETS if t not in specs]
    if missing:
        raise ScheduleError(f"missing specs for targets {missing}")
    for t in TARGETS:
        if specs[t].target != t:
            raise ScheduleError(f"spec under key {t!r} targets {specs[t].target!r}")

    b_epoch = []
    clamped = False
    bspec = specs["batch"]
    if bspec.kind == "constant":
        b_epoch = [min(int(bspec.params["b"]), n) if clamp_batch else int(bspec.params["b"])] * M
        clamped = clamp_batch and int(bspec.params["b"]) > n
    else:
        E = int(bspec.params["E"])
        for j in range(-(-M // E)):  # per interval block, batch is constant
            b = _eval_batch_epoch(bspec, j * E)
            if b > n and clamp_batch:
                clamped = True
                b = n
            b_epoch.extend([b] * min(E, M - j * E))
    if clamped:
        logger.warning(
            "batch schedule exceeds dataset size n=%d; clamped to full batch", n
        )

    T = np.array([-(-n // b) for b in b_epoch], dtype=np.int64)  # ceil(n/b)
    K = int(T.sum())
    epoch_of_step = np.repeat(np.arange(M, dtype=np.int64), T)

    ms = np.arange(M, dtype=np.int64)
    alpha_e = _eval_float_epochs(specs["lr"], ms, M)
    beta_e = _eval_float_epochs(specs["beta"], ms, M)
    gamma_e = _eval_float_epochs(specs["gamma"], ms, M)

    # cosine/polynomial endpoints may touch alpha_min = 0 (no-op steps)
    bad = np.flatnonzero(~((alpha_e >= 0) & np.isfinite(alpha_e)))
    if bad.size:
        raise PlanError(f"lr schedule negative or non-finite at epoch {bad[0]}")
    bad = np.flatnonzero(~((beta_e >= 0) & (beta_e < 1)))
    if bad.size:
        raise PlanError(f"beta schedule outside [0,1) at epoch {bad[0]}")
    bad = np.flatnonzero(~((gamma_e >= 0) & (gamma_e <= 1)))
    if bad.size:
        raise PlanError(f"gamma schedule outside [0,1] at epoch {bad[0]}")

    return StepPlan(
        alpha=np.repeat(alpha_e, T),
        beta=np.repeat(beta_e, T),
        gamma=np.repeat(gamma_e, T),
        batch=np.repeat(
            np.array(
                [float(b) if b <= 2**1023 else math.inf for b in b_epoch],
                dtype=np.float64,
            ),
            T,
        ),
        epoch_of_step=epoch_of_step,
        T=T,
        K=K,
        M=M,
        n=int(n),
        batch_clamped=clamped,
    )


def validate_thm2_condition(plan: StepPlan) -> bool:
    """True iff beta_k * (alpha_k/2 + 1) <= 1 holds at every step."""
    return first_thm2_violation(plan) is None


def first_thm2_violation(plan: StepPlan) -> int | None:
    """Index of the first step violating beta_k*(alpha_k/2 + 1) <= 1, if any."""
    bad = np.flatnonzero(plan.beta * (plan.alpha / 2.0 + 1.0) > 1.0)
    return int(bad[0]) if bad.size else None


@dataclass(frozen=True)
class AsymptoticReport:
    """Symbolic classification of the theorem (ii) summability conditions.

    ``thm1_ok``/``thm2_ok`` are None when a condition cannot be classified
    (e.g. a finite-horizon LR kind without a hybrid tail).
    """

    thm1_ok: bool | None
    thm2_ok: bool | None
    reasons: tuple[str, ...]


_DIV, _CONV, _UNDET = "diverges", "converges", "undetermined"


def _sum_alpha(lr: ScheduleSpec) -> tuple[str, str]:
    # requirement: sum alpha_k = +inf
    if lr.kind in ("constant", "decaying_sq_lr", "decaying_lr",
                   "hybrid_cosine_lr", "hybrid_polynomial_lr"):
        return _DIV, f"sum(alpha) diverges ({lr.kind})"
    return _UNDET, f"{lr.kind} is finite-horizon; use a hybrid_* kind for asymptotics"


def _sum_gamma_beta(beta: ScheduleSpec, gamma: ScheduleSpec) -> tuple[str, str]:
    gmax = gamma.params["gamma_max"]
    bmax = beta.params.get("beta_max")  # None for increasing_beta
    if gmax == 0 or bmax == 0:
        return _CONV, "gamma*beta is identically 0"
    ratio = 1.0
    decays = False
    if beta.kind == "step_decay":
        ratio *= beta.params["zeta"]
        decays = True
    elif beta.kind == "increasing_beta":
        pass  # beta_k -> 1 contributes no decay
    if gamma.kind == "step_decay":
        ratio *= gamma.params["lambda"]
        decays = True
    if not decays:
        return _DIV, "gamma_k*beta_k does not vanish (no step decay)"
    if ratio < 1:
        return _CONV, f"sum(gamma*beta) geometric with ratio {ratio:g} < 1"
    return _DIV, f"step-decay ratio product {ratio:g} >= 1 (see Open Questions)"


def _sum_alpha_sq_over_b(lr: ScheduleSpec, batch: ScheduleSpec) -> tuple[str, str]:
    if lr.kind in ("cosine_lr", "polynomial_lr"):
        return _UNDET, "finite-horizon lr; use a hybrid_* kind for asymptotics"
    if batch.kind == "exponential_bs":
        # alpha_k^2 <= alpha_max^2 and sum 1/b_k is geometric
        return _CONV, "sum(alpha^2/b) dominated by geometric 1/b_k"
    # constant batch: reduces to summability of alpha_k^2 (T_m constant)
    if lr.kind == "decaying_lr":
        return _CONV, "sum(alpha^2) ~ sum 1/(m+1)^2 with constant batch"
    return _DIV, f"sum(alpha^2/b) diverges for {lr.kind} + constant batch"


def _sum_alpha_sq_over_1mb(lr: ScheduleSpec, beta: ScheduleSpec) -> tuple[str, str]:
    if lr.kind in ("cosine_lr", "polynomial_lr"):
        return _UNDET, "finite-horizon lr; use a hybrid_* kind for asymptotics"
    if lr.kind == "decaying_lr":
        if beta.kind == "increasing_beta":
            # terms ~ T_m (m+1)^{3/4-2}
            return _CONV, "sum(alpha^2/(1-beta)) ~ sum (m+1)^(-5/4)"
        return _CONV, "sum(alpha^2/(1-beta)) ~ sum (m+1)^(-2) with bounded 1/(1-beta)"
    # constant / decaying_sq / hybrid tails: alpha_k^2 not summable (T_m >= 1)
    return _DIV, f"sum(alpha^2/(1-beta)) diverges for {lr.kind}"


def _sum_1mb_over_b(beta: ScheduleSpec, batch: ScheduleSpec) -> tuple[str, str]:
    if batch.kind == "exponential_bs":
        return _CONV, "sum((1-beta)/b) dominated by geometric 1/b_k"
    if beta.kind == "increasing_beta":
        return _DIV, "sum((1-beta)/b) ~ sum (m+1)^(-3/4) with constant batch"
    return _DIV, "1-beta_k does not vanish with constant batch"


def validate_asymptotic(specs: Mapping[str, ScheduleSpec]) -> AsymptoticReport:
    """Classify the Theorem 1(ii)/2(ii) conditions for a schedule family.

    Table-driven per scheduler kind; interprets the specs as k -> infinity
    sequences (no batch clamping, T_m in [1, T_0]).  Never takes numeric
    limits and never guesses: unknown combinations come back undetermined.
    """
    for t in TARGETS:
        if t not in specs or specs[t].target != t:
            raise ScheduleError(f"need a valid spec for target {t!r}")
    lr, batch, beta, gamma = specs["lr"], specs["batch"], specs["beta"], specs["gamma"]

    a_v, a_r = _sum_alpha(lr)
    gb_v, gb_r = _sum_gamma_beta(beta, gamma)
    ab_v, ab_r = _sum_alpha_sq_over_b(lr, batch)
    t1 = None
    if _UNDET not in (a_v, gb_v, ab_v):
        t1 = a_v == _DIV and gb_v == _CONV and ab_v == _CONV

    a2b_v, a2b_r = _sum_alpha_sq_over_1mb(lr, beta)
    bb_v, bb_r = _sum_1mb_over_b(beta, batch)
    t2 = None
    if _UNDET not in (a_v, a2b_v, bb_v):
        t2 = a_v == _DIV and a2b_v == _CONV and bb_v == _CONV

    reasons = (
        f"thm1: {a_r}; {gb_r}; {ab_r}",
        f"thm2: {a_r}; {a2b_r}; {bb_r}",
    )
    return AsymptoticReport(thm1_ok=t1, thm2_ok=t2, reasons=reasons)
