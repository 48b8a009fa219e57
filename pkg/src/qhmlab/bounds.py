"""Exact theorem sums, corollary closed-form upper bounds, and the theorem
right-hand sides they feed.

Exact sums over a :class:`~qhmlab.schedules.StepPlan` (compensated summation
via math.fsum so the 1e-12 domination tolerance is honest at K = 1e5):

    A_K = 1 / sum(alpha_k)
    B_K = sum(alpha_k^2 / b_k) / sum(alpha_k)          (decreasing gamma*beta route)
    C_K = sum(gamma_k beta_k) / sum(alpha_k)
    B'_K = sum((1-beta_k)/b_k) / sum(alpha_k)          (increasing beta route)
    C'_K = sum(alpha_k^2) / sum(alpha_k)
    D'_K = sum(alpha_k^2/(1-beta_k)) / sum(alpha_k)

The corollary upper bounds are implemented from the proofs.  Three printed
case labels/constants in the source material are provably typos (they fail
domination on direct evaluation); the proof-correct forms are used and the
discrepancies are documented in the project notes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum, log, sqrt
from typing import Mapping

import numpy as np

from .schedules import ScheduleSpec, StepPlan, first_thm2_violation


class NotCoveredError(ValueError):
    """Scheduler combination outside a corollary's case table."""


class Thm2ConditionError(ValueError):
    """The hypothesis beta_k(alpha_k/2 + 1) <= 1 fails at some step."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(
            f"beta_k*(alpha_k/2 + 1) <= 1 violated first at step k={step}"
        )


@dataclass(frozen=True)
class Thm1Constants:
    """Problem/schedule constants entering the decreasing-gamma*beta bound."""

    f0_minus_fstar: float
    L: float
    sigma2: float
    gb_bar: float
    alpha_max: float
    G2: float | None = None

    def __post_init__(self):
        if self.f0_minus_fstar < 0:
            raise ValueError("f0_minus_fstar must be >= 0")
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if not 0 <= self.gb_bar < 1:
            raise ValueError("gb_bar must be in [0, 1)")
        if not self.alpha_max * self.L < 2:
            raise ValueError("need alpha_max * L < 2")
        if self.G2 is not None and self.G2 < 0:
            raise ValueError("G2 must be >= 0")


@dataclass(frozen=True)
class Thm2Constants:
    """Constants entering the increasing-beta bound."""

    f0_minus_fstar: float
    sigma2: float
    L: float
    G2: float


def exact_sums_thm1(plan: StepPlan) -> dict[str, float]:
    """Direct-summation A_K, B_K, C_K over the plan's K steps."""
    if plan.K < 1:
        raise ValueError("plan has no steps")
    sum_alpha = fsum(plan.alpha)
    if sum_alpha == 0:
        raise ZeroDivisionError("sum of learning rates is zero")
    with np.errstate(divide="ignore"):  # 1/inf = 0 for astronomically large b
        a2_over_b = plan.alpha**2 / plan.batch
    return {
        "A_K": 1.0 / sum_alpha,
        "B_K": fsum(a2_over_b) / sum_alpha,
        "C_K": fsum(plan.gamma * plan.beta) / sum_alpha,
    }


def thm1_rhs(c: Thm1Constants, sums: Mapping[str, float]) -> float:
    """Full right-hand side of the decreasing-gamma*beta convergence bound.

    The G^2 term is dropped when C_K = 0 (it multiplies zero); otherwise G2
    must be declared.
    """
    denom = (1.0 - c.gb_bar) * (2.0 - c.alpha_max * c.L)
    total = 2.0 * c.f0_minus_fstar * sums["A_K"] + c.L * c.sigma2 * sums["B_K"]
    if sums["C_K"] > 0:
        if c.G2 is None:
            raise ValueError("C_K > 0 requires a gradient bound G2")
        total += (
            2.0 * c.alpha_max * (1.0 + c.alpha_max * c.L) * c.G2 * sums["C_K"]
        )
    return total / denom


def exact_sums_thm2(plan: StepPlan) -> dict[str, float]:
    """A_K plus the primed sums B'_K, C'_K, D'_K of the increasing-beta route.

    Requires the theorem hypothesis beta_k(alpha_k/2 + 1) <= 1; raises
    :class:`Thm2ConditionError` naming the first offending step otherwise.
    """
    if plan.K < 1:
        raise ValueError("plan has no steps")
    bad = first_thm2_violation(plan)
    if bad is not None:
        raise Thm2ConditionError(bad)
    sum_alpha = fsum(plan.alpha)
    with np.errstate(divide="ignore"):
        one_mb_over_b = (1.0 - plan.beta) / plan.batch
    return {
        "A_K": 1.0 / sum_alpha,
        "B_K": fsum(one_mb_over_b) / sum_alpha,
        "C_K": fsum(plan.alpha**2) / sum_alpha,
        "D_K": fsum(plan.alpha**2 / (1.0 - plan.beta)) / sum_alpha,
    }


def thm2_rhs(c: Thm2Constants, sums: Mapping[str, float]) -> float:
    """2*df*A_K + 4*sigma2*B'_K + 5*L^2 G^2*C'_K + 2*L^2 G^2*D'_K."""
    l2g2 = c.L**2 * c.G2
    return (
        2.0 * c.f0_minus_fstar * sums["A_K"]
        + 4.0 * c.sigma2 * sums["B_K"]
        + 5.0 * l2g2 * sums["C_K"]
        + 2.0 * l2g2 * sums["D_K"]
    )


@dataclass(frozen=True)
class Cor1Upper:
    A_up: float
    B_up: float
    C_up: float | None
    note: str | None = None


@dataclass(frozen=True)
class Cor2Upper:
    A_up: float
    B_up: float
    C_up: float
    D_up: float
    bound_diverges: bool
    note: str | None = None


def _t0(specs: Mapping[str, ScheduleSpec], n: int) -> int:
    bs = specs["batch"]
    b0 = bs.params["b"] if bs.kind == "constant" else bs.params["b0"]
    return -(-n // int(b0))  # ceil(n / b'_0)


def corollary1_upper(
    specs: Mapping[str, ScheduleSpec], n: int, K: int
) -> Cor1Upper:
    """Closed-form upper bounds on A_K, B_K, C_K for the covered combos.

    Covered: lr in {constant, decaying_sq_lr, cosine_lr, polynomial_lr} x
    batch in {constant, exponential_bs}; the C_K bound additionally needs
    step-decay beta and gamma with a common interval E and ratio product < 1
    (or an identically-zero product, where C_K = 0).
    """
    lr, bs = specs["lr"], specs["batch"]
    if K < 1:
        raise ValueError("K must be >= 1")
    if lr.kind not in ("constant", "decaying_sq_lr", "cosine_lr", "polynomial_lr"):
        raise NotCoveredError(f"lr kind {lr.kind!r} not covered by Corollary 1")
    if bs.kind not in ("constant", "exponential_bs"):
        raise NotCoveredError(f"batch kind {bs.kind!r} not covered by Corollary 1")

    amax = lr.params["alpha_max"]
    amin = lr.params.get("alpha_min", amax if lr.kind == "constant" else 0.0)
    p = lr.params.get("p")
    T0 = _t0(specs, n)
    sqk = sqrt(K + 1.0) - 1.0

    if lr.kind == "constant":
        A_up = 1.0 / (amax * K)
    elif lr.kind == "decaying_sq_lr":
        A_up = 1.0 / (2.0 * amax * sqk)
    elif lr.kind == "cosine_lr":
        A_up = 2.0 / ((amin + amax) * K)
    else:
        A_up = (p + 1.0) / ((amax + p * amin) * K)

    if bs.kind == "constant":
        b = int(bs.params["b"])
        if lr.kind == "constant":
            B_up = amax / b
        elif lr.kind == "decaying_sq_lr":
            B_up = amax * T0 * (1.0 + log(K + 1.0)) / (2.0 * b * sqk)
        elif lr.kind == "cosine_lr":
            B_up = (amax + amin) / b + T0 * (amax - amin) ** 2 / (
                2.0 * b * (amax + amin) * K
            )
        else:
            B_up = ((p + 1.0) * amax**2 + 2.0 * p * amax * amin + 2.0 * p**2 * amin**2) / (
                b * (2.0 * p + 1.0) * (amax + p * amin)
            ) + (p + 1.0) * (amax**2 - amin**2) * T0 / ((amax + p * amin) * K)
    else:
        b0 = int(bs.params["b0"])
        delta = bs.params["delta"]
        E = int(bs.params["E"])
        geo = T0 * E * delta / (b0 * (delta - 1.0))  # bound on sum 1/b_k
        if lr.kind == "constant":
            B_up = amax * geo / K
        elif lr.kind == "decaying_sq_lr":
            B_up = amax * geo / (2.0 * sqk)
        elif lr.kind == "cosine_lr":
            B_up = 2.0 * amax**2 * geo / ((amax + amin) * K)
        else:
            B_up = amax**2 * (p + 1.0) * geo / ((amax + p * amin) * K)

    C_up, note = _cor1_c_term(specs, lr, amax, amin, p, T0, K, sqk)
    return Cor1Upper(A_up=A_up, B_up=B_up, C_up=C_up, note=note)


def _cor1_c_term(specs, lr, amax, amin, p, T0, K, sqk):
    beta, gamma = specs["beta"], specs["gamma"]
    gmax = gamma.params["gamma_max"]
    bmax = beta.params.get("beta_max", 1.0)  # increasing_beta has sup 1
    if gmax * bmax == 0.0 and beta.kind != "increasing_beta":
        return 0.0, None
    if gmax == 0.0:
        return 0.0, None
    if not (beta.kind == "step_decay" and gamma.kind == "step_decay"):
        return None, "C_K bound needs step-decay beta and gamma"
    if int(beta.params["E"]) != int(gamma.params["E"]):
        return None, "C_K bound needs a common interval E for beta and gamma"
    ratio = beta.params["zeta"] * gamma.params["lambda"]
    if ratio >= 1.0:
        return None, f"step-decay ratio product {ratio:g} >= 1: geometric bound unavailable"
    E = int(beta.params["E"])
    top = gmax * bmax * T0 * E / (1.0 - ratio)  # bound on sum gamma_k beta_k
    if lr.kind == "constant":
        return top / (amax * K), None
    if lr.kind == "decaying_sq_lr":
        return top / (2.0 * amax * sqk), None
    if lr.kind == "cosine_lr":
        return 2.0 * top / ((amax + amin) * K), None
    return (p + 1.0) * top / ((amax + p * amin) * K), None


def corollary2_upper(
    specs: Mapping[str, ScheduleSpec], n: int, K: int
) -> Cor2Upper:
    """Closed-form upper bounds for the increasing-beta route.

    Covered: (decaying_sq_lr ^ constant beta) or (decaying_lr ^
    increasing_beta), each with constant or exponential batch.  Combos whose
    bound does not vanish as K grows carry ``bound_diverges=True`` — a
    non-convergence certificate, not a rate.
    """
    lr, bs, beta = specs["lr"], specs["batch"], specs["beta"]
    if K < 1:
        raise ValueError("K must be >= 1")
    if bs.kind not in ("constant", "exponential_bs"):
        raise NotCoveredError(f"batch kind {bs.kind!r} not covered by Corollary 2")
    combo_sq = lr.kind == "decaying_sq_lr" and beta.kind == "constant"
    combo_dec = lr.kind == "decaying_lr" and beta.kind == "increasing_beta"
    if not (combo_sq or combo_dec):
        raise NotCoveredError(
            "Corollary 2 covers decaying_sq_lr^constant-beta and "
            f"decaying_lr^increasing_beta only (got {lr.kind}^{beta.kind})"
        )

    amax = lr.params["alpha_max"]
    T0 = _t0(specs, n)
    sqk = sqrt(K + 1.0) - 1.0
    logk = log(K + 1.0)
    if bs.kind == "exponential_bs":
        b0 = int(bs.params["b0"])
        delta = bs.params["delta"]
        E = int(bs.params["E"])
        geo = T0 * E * delta / (b0 * (delta - 1.0))

    if combo_sq:
        bmax = beta.params["beta_max"]
        A_up = 1.0 / (2.0 * amax * sqk)
        C_up = amax * T0 * (1.0 + logk) / (2.0 * sqk)
        D_up = C_up / (1.0 - bmax)
        if bs.kind == "constant":
            b = int(bs.params["b"])
            B_up = K * (1.0 - bmax) / (2.0 * b * amax * sqk)
            return Cor2Upper(A_up, B_up, C_up, D_up, bound_diverges=True,
                             note="B'_K bound grows like sqrt(K) at constant batch")
        B_up = (1.0 - bmax) * geo / (2.0 * amax * sqk)
        return Cor2Upper(A_up, B_up, C_up, D_up, bound_diverges=False)

    bmin = beta.params["beta_min"]
    A_up = 1.0 / (amax * logk)
    C_up = 2.0 * amax * T0 / logk
    # sum (m+1)^(-5/4) <= 1 + integral = 5 - 4(M+1)^(-1/4) <= 5
    D_up = 5.0 * amax * T0 / ((1.0 - bmin) * logk)
    if bs.kind == "constant":
        b = int(bs.params["b"])
        B_up = T0 * (1.0 + 4.0 * (1.0 - bmin) * (K + 1.0) ** 0.25) / (b * amax * logk)
        return Cor2Upper(A_up, B_up, C_up, D_up, bound_diverges=True,
                         note="B'_K bound grows like K^(1/4)/log K at constant batch")
    B_up = (1.0 - bmin) * geo / (amax * logk)
    return Cor2Upper(A_up, B_up, C_up, D_up, bound_diverges=False)


def fit_loglog_slope(ks, values) -> float:
    """Least-squares slope of log(value) against log(K)."""
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(np.log(ks), np.log(values), 1)[0])
