"""Benchmark the compiled epoch kernels against the numpy fallback.

Usage: python benchmarks/bench_engines.py [--steps N]

Times one optimization epoch-loop per problem family on both engines and
verifies they agree (bit-identical trajectories for the quadratic, 1e-9
relative otherwise; index streams always bit-identical).
"""

import argparse
import time

import numpy as np

from qhmlab import engine, problems
from qhmlab.engine import fallback


def run(problem, steps, b, runner):
    x = np.random.default_rng(1).standard_normal(problem.dim)
    d = np.zeros(problem.dim)
    t0 = time.perf_counter()
    state, _, _ = runner(
        problem, x, d, 42, alpha=0.05, beta=0.9, gamma=0.7, b=b, T=steps
    )
    return time.perf_counter() - t0, x, state


def accel_runner(problem, x, d, state, *, alpha, beta, gamma, b, T):
    acc = engine._accel
    if problem.kind == "quadratic":
        return acc.run_epoch_quadratic(x, d, state, problem.a, problem.c, b, T, alpha, beta, gamma, 0)
    if problem.kind == "sigmoid_sum":
        return acc.run_epoch_sigmoid(x, d, state, problem.A, problem.t, b, T, alpha, beta, gamma, 0)
    return acc.run_epoch_logistic(x, d, state, problem.U, b, T, alpha, beta, gamma, 0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--batch", type=int, default=32)
    args = ap.parse_args()

    if engine._accel is None:
        print("compiled extension not available; nothing to compare")
        return

    cases = {
        "quadratic": problems.make_noisy_quadratic(dim=16, n=1024, seed=3, kappa=10.0),
        "sigmoid_sum": problems.make_sigmoid_sum(dim=16, n=1024, seed=3),
        "logistic": problems.make_logistic(dim=16, n=1024, seed=3),
    }
    print(f"{args.steps} steps, batch {args.batch}, dim 16, n 1024")
    print(f"{'problem':<14}{'pure (s)':>10}{'accel (s)':>11}{'speedup':>9}  agreement")
    for name, prob in cases.items():
        t_pure, x_pure, st_pure = run(prob, args.steps, args.batch, fallback.run_epoch)
        t_acc, x_acc, st_acc = run(prob, args.steps, args.batch, accel_runner)
        assert st_pure == st_acc, "index streams must be bit-identical"
        if name == "quadratic":
            agree = "bit-identical" if np.array_equal(x_pure, x_acc) else "MISMATCH"
        else:
            rel = float(np.max(np.abs(x_pure - x_acc) / (np.abs(x_pure) + 1e-30)))
            agree = f"max rel {rel:.1e}" + ("" if rel < 1e-9 else "  MISMATCH")
        print(f"{name:<14}{t_pure:>10.3f}{t_acc:>11.4f}{t_pure / t_acc:>8.0f}x  {agree}")


if __name__ == "__main__":
    main()
