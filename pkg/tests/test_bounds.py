"""Exact-sum definitions, theorem right-hand sides, and corollary bounds.

The independent oracle computes every sum epoch-wise in exact rational
arithmetic (fractions.Fraction), never touching the step-expanded arrays the
implementation sums over.
"""

from fractions import Fraction

import numpy as np
import pytest

from qhmlab import bounds as B
from qhmlab import schedules as S


def spec(target, kind, **params):
    return S.ScheduleSpec(target, kind, params)


def four(**over):
    d = {
        "batch": spec("batch", "constant", b=64),
        "lr": spec("lr", "constant", alpha_max=0.1),
        "beta": spec("beta", "constant", beta_max=0.0),
        "gamma": spec("gamma", "constant", gamma_max=0.0),
    }
    d.update(over)
    return d


def rational_epoch_sums(n, M, b_of_m, alpha_of_m, beta_of_m, gamma_of_m):
    """Exact A_K, B_K, C_K via per-epoch rational accumulation."""
    sum_a = sum_a2b = sum_gb = Fraction(0)
    K = 0
    for m in range(M):
        b = b_of_m(m)
        T = -(-n // b)
        K += T
        a = Fraction(alpha_of_m(m))
        sum_a += T * a
        sum_a2b += T * a * a / b
        sum_gb += T * Fraction(gamma_of_m(m)) * Fraction(beta_of_m(m))
    return {
        "A_K": float(1 / sum_a),
        "B_K": float(sum_a2b / sum_a),
        "C_K": float(sum_gb / sum_a),
        "K": K,
    }


class TestExactSumsThm1:
    def test_constant_everything(self):
        specs = four(
            beta=spec("beta", "constant", beta_max=0.0),
            gamma=spec("gamma", "constant", gamma_max=0.0),
        )
        plan = S.expand(specs, n=64_000, M=1)  # T_0 = 1000 steps
        sums = B.exact_sums_thm1(plan)
        assert plan.K == 1000
        assert sums["A_K"] == pytest.approx(0.01, rel=1e-12)
        assert sums["B_K"] == pytest.approx(0.1 / 64, rel=1e-12)
        assert sums["C_K"] == 0.0

    def test_single_step(self):
        plan = S.expand(four(batch=spec("batch", "constant", b=64)), n=64, M=1)
        assert plan.K == 1
        assert B.exact_sums_thm1(plan)["A_K"] == pytest.approx(1 / 0.1, rel=1e-15)

    def test_rational_oracle_exponential_bs(self):
        # n=1024, b0=8, delta=2, E=1, M=8 -> T = 128,64,...,1; K = 255
        specs = four(
            batch=spec("batch", "exponential_bs", b0=8, delta=2, E=1),
            beta=spec("beta", "step_decay", beta_max=0.9, zeta=0.5, E=1),
            gamma=spec("gamma", "step_decay", gamma_max=0.7, **{"lambda": 0.5}, E=1),
        )
        plan = S.expand(specs, n=1024, M=8, clamp_batch=False)
        want = rational_epoch_sums(
            1024, 8,
            b_of_m=lambda m: 8 * 2**m,
            alpha_of_m=lambda m: Fraction(1, 10),
            beta_of_m=lambda m: Fraction(9, 10) * Fraction(1, 2) ** m,
            gamma_of_m=lambda m: Fraction(7, 10) * Fraction(1, 2) ** m,
        )
        assert plan.K == want["K"] == 255
        sums = B.exact_sums_thm1(plan)
        for key in ("A_K", "B_K", "C_K"):
            assert sums[key] == pytest.approx(want[key], rel=1e-13)

    def test_rational_oracle_decaying_sq(self):
        specs = four(
            lr=spec("lr", "decaying_sq_lr", alpha_max=0.25),
            batch=spec("batch", "constant", b=16),
        )
        plan = S.expand(specs, n=64, M=50)
        # alpha values are irrational; oracle uses the same float per epoch
        import math
        want = rational_epoch_sums(
            64, 50,
            b_of_m=lambda m: 16,
            alpha_of_m=lambda m: Fraction(0.25 / math.sqrt(m + 1)),
            beta_of_m=lambda m: 0,
            gamma_of_m=lambda m: 0,
        )
        sums = B.exact_sums_thm1(plan)
        assert sums["A_K"] == pytest.approx(want["A_K"], rel=1e-13)
        assert sums["B_K"] == pytest.approx(want["B_K"], rel=1e-13)

    def test_astronomical_batches_do_not_overflow(self):
        specs = four(batch=spec("batch", "exponential_bs", b0=8, delta=2, E=1))
        plan = S.expand(specs, n=1024, M=1500, clamp_batch=False)
        sums = B.exact_sums_thm1(plan)
        assert np.isfinite(sums["B_K"]) and sums["B_K"] > 0


class TestThm1Rhs:
    def test_noise_free_pure_optimization_term(self):
        c = B.Thm1Constants(
            f0_minus_fstar=3.0, L=2.0, sigma2=0.0, gb_bar=0.0, alpha_max=0.5
        )
        sums = {"A_K": 0.125, "B_K": 0.0, "C_K": 0.0}
        assert B.thm1_rhs(c, sums) == pytest.approx(2 * 3.0 * 0.125 / (2 - 1.0))

    def test_noise_floor_term(self):
        # constant LR/BS: RHS - optimization term = L sigma^2 alpha/((2-aL) b)
        alpha, b, L, sig2 = 0.1, 64, 1.0, 4.0
        c = B.Thm1Constants(
            f0_minus_fstar=1.0, L=L, sigma2=sig2, gb_bar=0.0, alpha_max=alpha
        )
        K = 1000
        sums = {"A_K": 1 / (alpha * K), "B_K": alpha / b, "C_K": 0.0}
        floor = B.thm1_rhs(c, sums) - 2 * 1.0 * sums["A_K"] / (2 - alpha * L)
        assert floor == pytest.approx(L * sig2 * alpha / ((2 - alpha * L) * b), rel=1e-12)

    def test_momentum_term_needs_G(self):
        c = B.Thm1Constants(
            f0_minus_fstar=1.0, L=1.0, sigma2=1.0, gb_bar=0.5, alpha_max=0.1
        )
        with pytest.raises(ValueError, match="G2"):
            B.thm1_rhs(c, {"A_K": 1.0, "B_K": 0.1, "C_K": 0.2})

    def test_stepsize_precondition(self):
        with pytest.raises(ValueError, match="alpha_max"):
            B.Thm1Constants(
                f0_minus_fstar=1.0, L=1.0, sigma2=0.0, gb_bar=0.0, alpha_max=2.0
            )


class TestCorollary1:
    def test_constant_case_is_tight(self):
        specs = four()
        plan = S.expand(specs, n=64_000, M=1)
        up = B.corollary1_upper(specs, 64_000, plan.K)
        sums = B.exact_sums_thm1(plan)
        assert up.A_up == pytest.approx(sums["A_K"], rel=1e-14)
        assert up.B_up == pytest.approx(sums["B_K"], rel=1e-14)
        assert up.C_up == 0.0

    def test_cosine_A_bound(self):
        specs = four(lr=spec("lr", "cosine_lr", alpha_max=0.1, alpha_min=0.0),
                     batch=spec("batch", "constant", b=512))
        K = 1000
        plan = S.expand(specs, n=1024, M=K // 2)
        up = B.corollary1_upper(specs, 1024, K)
        assert up.A_up == pytest.approx(2 / (0.1 * K), rel=1e-14)
        assert B.exact_sums_thm1(plan)["A_K"] <= up.A_up * (1 + 1e-12)

    def test_exponential_bs_B_formula(self):
        specs = four(batch=spec("batch", "exponential_bs", b0=8, delta=2, E=30))
        K = 7650
        up = B.corollary1_upper(specs, 1024, K)
        T0 = 128
        assert up.B_up == pytest.approx(0.1 * T0 * 30 * 2 / (8 * 1 * K), rel=1e-14)

    def test_uncovered_lr_kind(self):
        specs = four(lr=spec("lr", "decaying_lr", alpha_max=0.1))
        with pytest.raises(B.NotCoveredError, match="not covered"):
            B.corollary1_upper(specs, 1024, 100)

    def test_ratio_product_not_below_one(self):
        specs = four(
            beta=spec("beta", "step_decay", beta_max=0.9, zeta=2.0, E=1),
            gamma=spec("gamma", "step_decay", gamma_max=0.7, **{"lambda": 0.5}, E=1),
        )
        up = B.corollary1_upper(specs, 1024, 100)
        assert up.C_up is None
        assert ">= 1" in up.note


class TestExactSumsThm2:
    def test_momentum_free_reduction(self):
        specs = four(batch=spec("batch", "constant", b=64))
        plan = S.expand(specs, n=64 * 100, M=10)  # K = 1000, beta = 0
        sums = B.exact_sums_thm2(plan)
        # B' = sum(1/b)/sum(alpha) = K/(b*alpha*K) = 1/(alpha*b)
        assert sums["B_K"] == pytest.approx(1 / (0.1 * 64), rel=1e-12)
        assert sums["C_K"] == pytest.approx(0.1, rel=1e-12)
        assert sums["D_K"] == pytest.approx(sums["C_K"], rel=1e-12)

    def test_constant_beta_D_is_C_scaled(self):
        specs = four(
            lr=spec("lr", "decaying_sq_lr", alpha_max=0.1),
            beta=spec("beta", "constant", beta_max=0.9),
        )
        plan = S.expand(specs, n=640, M=20)
        sums = B.exact_sums_thm2(plan)
        assert sums["D_K"] == pytest.approx(sums["C_K"] / (1 - 0.9), rel=1e-12)

    def test_condition_violation_names_step(self):
        specs = four(
            lr=spec("lr", "constant", alpha_max=0.1),
            beta=spec("beta", "constant", beta_max=0.96),
        )
        plan = S.expand(specs, n=64, M=2)
        with pytest.raises(B.Thm2ConditionError, match="k=0"):
            B.exact_sums_thm2(plan)

    def test_rational_oracle_increasing_beta(self):
        specs = four(
            lr=spec("lr", "decaying_lr", alpha_max=0.1),
            beta=spec("beta", "increasing_beta", beta_min=0.5),
            batch=spec("batch", "constant", b=32),
        )
        plan = S.expand(specs, n=128, M=30)
        sums = B.exact_sums_thm2(plan)
        sum_a = sum_b = sum_c = sum_d = Fraction(0)
        for m in range(30):
            T = 4
            a = Fraction(0.1 / (m + 1))
            beta = Fraction(1.0 - 0.5 / (m + 1) ** 0.75)
            sum_a += T * a
            sum_b += T * (1 - beta) / 32
            sum_c += T * a * a
            sum_d += T * a * a / (1 - beta)
        assert sums["A_K"] == pytest.approx(float(1 / sum_a), rel=1e-12)
        assert sums["B_K"] == pytest.approx(float(sum_b / sum_a), rel=1e-12)
        assert sums["C_K"] == pytest.approx(float(sum_c / sum_a), rel=1e-12)
        assert sums["D_K"] == pytest.approx(float(sum_d / sum_a), rel=1e-12)


class TestThm2Rhs:
    def test_noise_and_momentum_free(self):
        c = B.Thm2Constants(f0_minus_fstar=2.0, sigma2=0.0, L=1.0, G2=0.0)
        sums = {"A_K": 0.5, "B_K": 1.0, "C_K": 1.0, "D_K": 1.0}
        assert B.thm2_rhs(c, sums) == pytest.approx(2.0)

    def test_G_squared_scaling(self):
        sums = {"A_K": 0.0, "B_K": 0.0, "C_K": 0.3, "D_K": 0.2}
        c1 = B.Thm2Constants(f0_minus_fstar=0.0, sigma2=0.0, L=2.0, G2=1.0)
        c2 = B.Thm2Constants(f0_minus_fstar=0.0, sigma2=0.0, L=2.0, G2=4.0)
        assert B.thm2_rhs(c2, sums) == pytest.approx(4.0 * B.thm2_rhs(c1, sums))


class TestCorollary2:
    def test_divergent_constant_bs_row_flagged(self):
        specs = four(
            lr=spec("lr", "decaying_sq_lr", alpha_max=0.1),
            beta=spec("beta", "constant", beta_max=0.9),
            batch=spec("batch", "constant", b=16),
        )
        up = B.corollary2_upper(specs, 1024, 10_000)
        assert up.bound_diverges
        # B'_up grows like sqrt(K)
        up_big = B.corollary2_upper(specs, 1024, 1_000_000)
        assert up_big.B_up > up.B_up

    def test_exponential_bs_vanishes_like_inverse_log(self):
        specs = four(
            lr=spec("lr", "decaying_lr", alpha_max=0.1),
            beta=spec("beta", "increasing_beta", beta_min=0.5),
            batch=spec("batch", "exponential_bs", b0=8, delta=2, E=1),
        )
        ups = [B.corollary2_upper(specs, 1024, K) for K in (10**3, 10**6, 10**9)]
        assert not ups[0].bound_diverges
        for a, b in zip(ups, ups[1:]):
            for term in ("A_up", "B_up", "C_up", "D_up"):
                assert getattr(b, term) < getattr(a, term)
        # inverse-log rate: ratio between K=1e3 and 1e9 is ~3, not polynomial
        assert ups[0].A_up / ups[2].A_up == pytest.approx(3.0, rel=0.01)

    def test_K1_sanity_all_finite_and_dominating(self):
        for lr_kind, beta_spec in [
            ("decaying_sq_lr", spec("beta", "constant", beta_max=0.9)),
            ("decaying_lr", spec("beta", "increasing_beta", beta_min=0.5)),
        ]:
            for bs in (
                spec("batch", "constant", b=1024),
                spec("batch", "exponential_bs", b0=1024, delta=2, E=1),
            ):
                specs = four(lr=spec("lr", lr_kind, alpha_max=0.1), beta=beta_spec, batch=bs)
                plan = S.expand(specs, n=1024, M=1, clamp_batch=False)
                assert plan.K == 1
                sums = B.exact_sums_thm2(plan)
                up = B.corollary2_upper(specs, 1024, 1)
                for exact_key, up_key in [
                    ("A_K", "A_up"), ("B_K", "B_up"), ("C_K", "C_up"), ("D_K", "D_up")
                ]:
                    bound = getattr(up, up_key)
                    assert np.isfinite(bound)
                    assert sums[exact_key] <= bound * (1 + 1e-12)

    def test_uncovered_combo_rejected(self):
        specs = four(
            lr=spec("lr", "constant", alpha_max=0.1),
            beta=spec("beta", "constant", beta_max=0.9),
        )
        with pytest.raises(B.NotCoveredError):
            B.corollary2_upper(specs, 1024, 100)


def test_fit_loglog_slope_exact_powerlaw():
    ks = np.array([10.0, 100.0, 1000.0])
    assert B.fit_loglog_slope(ks, 5.0 / ks) == pytest.approx(-1.0, abs=1e-12)
    assert B.fit_loglog_slope(ks, 2.0 / np.sqrt(ks)) == pytest.approx(-0.5, abs=1e-12)
