"""Experiment harness: wires schedules, problems, optimizers, and bounds into
reproducible runs with machine-readable logs.

Outputs per run directory:

  seed_<seed>.csv   per-epoch rows (fixed column order, 17-significant-digit
                    floats, byte-reproducible given identical config+seeds)
  aggregate.csv     mean/min/max across seeds per epoch
  summary.json      config echo + FNV-1a config hash + metrics + bound report
                    (the only place a timestamp appears)

An "epoch" is T_m steps of the expanded plan (sampling is with replacement;
no data permutation), and the full gradient is evaluated once per logged
epoch.  Runs halt deterministically when the loss exceeds 1e12 or goes
non-finite; the partial log is flushed and the summary is marked diverged.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as _bounds
from . import engine
from . import problems as _problems
from . import schedules as _schedules
from .optim import shb_equivalent
from .rng import MASK64

DIVERGE_THRESHOLD = 1e12
_X0_SALT = 0xD1B54A32D192ED03

OPTIMIZERS = ("qhm", "nshb", "shb", "sgd")

CSV_COLUMNS = (
    "epoch",
    "step",
    "loss",
    "full_grad_norm",
    "min_full_grad_norm",
    "alpha",
    "beta",
    "gamma",
    "batch",
)

_PROBLEM_FACTORIES = {
    "noisy_quadratic": (
        _problems.make_noisy_quadratic,
        {"dim", "n", "seed", "kappa", "spread"},
    ),
    "sigmoid_sum": (_problems.make_sigmoid_sum, {"dim", "n", "seed", "scale"}),
    "logistic": (_problems.make_logistic, {"dim", "n", "seed", "margin"}),
}


class ConfigError(ValueError):
    """Structured validation failure listing every offending field."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config: " + "; ".join(errors))


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def config_hash(normalized: dict) -> str:
    """Hex FNV-1a over the canonicalized (sorted, compact) config JSON."""
    blob = json.dumps(normalized, sort_keys=True, separators=(",", ":"))
    return format(fnv1a64(blob.encode("utf-8")), "016x")


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class RunConfig:
    """Parsed + validated experiment description."""

    problem_name: str
    problem_params: dict
    optimizer: str
    specs: dict[str, _schedules.ScheduleSpec]
    epochs: int
    seeds: list[int]
    output_dir: str
    log_every: int
    init_mode: str
    init_seed: int
    init_scale: float
    normalized: dict = field(repr=False, default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.normalized)

    def make_problem(self) -> _problems.FiniteSumProblem:
        factory, _ = _PROBLEM_FACTORIES[self.problem_name]
        return factory(**self.problem_params)

    def make_plan(self, n: int, *, clamp_batch: bool = True) -> _schedules.StepPlan:
        return _schedules.expand(self.specs, n, self.epochs, clamp_batch=clamp_batch)


_TOP_KEYS = {
    "problem",
    "optimizer",
    "schedules",
    "epochs",
    "seeds",
    "output_dir",
    "log_every",
    "init",
}


def parse_config(raw: dict) -> RunConfig:
    """Strict-mode parse: unknown keys anywhere are rejected."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown top-level keys: {sorted(unknown)}")

    prob = raw.get("problem")
    problem_name, problem_params = "", {}
    if not isinstance(prob, dict) or set(prob) - {"name", "params"}:
        errors.append("problem: need an object with keys {name, params}")
    else:
        problem_name = prob.get("name", "")
        if problem_name not in _PROBLEM_FACTORIES:
            errors.append(
                f"problem.name: unknown {problem_name!r}; "
                f"choose from {sorted(_PROBLEM_FACTORIES)}"
            )
        else:
            allowed = _PROBLEM_FACTORIES[problem_name][1]
            problem_params = dict(prob.get("params", {}))
            bad = set(problem_params) - allowed
            if bad:
                errors.append(f"problem.params: unknown keys {sorted(bad)}")
            for req in ("dim", "n", "seed"):
                if req not in problem_params:
                    errors.append(f"problem.params.{req}: required")

    optimizer = raw.get("optimizer", "")
    if optimizer not in OPTIMIZERS:
        errors.append(f"optimizer: must be one of {OPTIMIZERS}")

    specs: dict[str, _schedules.ScheduleSpec] = {}
    sched = raw.get("schedules")
    if not isinstance(sched, dict):
        errors.append("schedules: need an object with batch/lr/beta/gamma")
        sched = {}
    unknown = set(sched) - set(_schedules.TARGETS)
    if unknown:
        errors.append(f"schedules: unknown targets {sorted(unknown)}")
    for target in _schedules.TARGETS:
        entry = sched.get(target)
        if entry is None:
            if target in ("beta", "gamma") and optimizer == "sgd":
                specs[target] = _schedules.constant_spec(target, 0.0)
                continue
            errors.append(f"schedules.{target}: required")
            continue
        if not isinstance(entry, dict) or set(entry) - {"kind", "params"}:
            errors.append(f"schedules.{target}: need an object {{kind, params}}")
            continue
        try:
            specs[target] = _schedules.ScheduleSpec(
                target, entry.get("kind", ""), entry.get("params", {})
            )
        except _schedules.ScheduleError as exc:
            errors.append(f"schedules.{target}: {exc}")

    epochs = raw.get("epochs")
    if not isinstance(epochs, int) or isinstance(epochs, bool) or epochs < 1:
        errors.append("epochs: need an integer >= 1")
    seeds = raw.get("seeds")
    if (
        not isinstance(seeds, list)
        or not seeds
        or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)
    ):
        errors.append("seeds: need a non-empty list of integers")
    elif len(set(seeds)) != len(seeds):
        errors.append("seeds: duplicates not allowed")

    log_every = raw.get("log_every", 1)
    if not isinstance(log_every, int) or isinstance(log_every, bool) or log_every < 1:
        errors.append("log_every: need an integer >= 1")

    init = raw.get("init", {})
    if not isinstance(init, dict) or set(init) - {"mode", "seed", "scale"}:
        errors.append("init: need an object with keys among {mode, seed, scale}")
        init = {}
    init_mode = init.get("mode", "per_seed")
    if init_mode not in ("per_seed", "fixed"):
        errors.append("init.mode: must be 'per_seed' or 'fixed'")
    init_seed = init.get("seed", 0)
    if not isinstance(init_seed, int) or isinstance(init_seed, bool):
        errors.append("init.seed: need an integer")
    init_scale = init.get("scale", 1.0)
    if not isinstance(init_scale, (int, float)) or isinstance(init_scale, bool):
        errors.append("init.scale: need a number")

    output_dir = raw.get("output_dir", "")
    if not isinstance(output_dir, str):
        errors.append("output_dir: need a string path")

    if errors:
        raise ConfigError(errors)

    normalized = {
        "problem": {"name": problem_name, "params": dict(sorted(problem_params.items()))},
        "optimizer": optimizer,
        "schedules": {
            t: {"kind": specs[t].kind, "params": dict(sorted(specs[t].params.items()))}
            for t in _schedules.TARGETS
        },
        "epochs": epochs,
        "seeds": list(seeds),
        "log_every": log_every,
        "init": {"mode": init_mode, "seed": init_seed, "scale": float(init_scale)},
    }
    return RunConfig(
        problem_name=problem_name,
        problem_params=problem_params,
        optimizer=optimizer,
        specs=specs,
        epochs=epochs,
        seeds=list(seeds),
        output_dir=output_dir,
        log_every=log_every,
        init_mode=init_mode,
        init_seed=init_seed,
        init_scale=float(init_scale),
        normalized=normalized,
    )


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


def effective_plan(
    plan: _schedules.StepPlan, optimizer: str
) -> _schedules.StepPlan:
    """Plan with beta/gamma replaced by the optimizer's effective values.

    sgd uses gamma=beta=0, nshb gamma=1; shb is parameterized by its NSHB
    equivalent (gamma=1) and converted per epoch when stepping.
    """
    if optimizer == "qhm":
        return plan
    beta = plan.beta if optimizer in ("nshb", "shb") else np.zeros_like(plan.beta)
    gamma = (
        np.ones_like(plan.gamma)
        if optimizer in ("nshb", "shb")
        else np.zeros_like(plan.gamma)
    )
    return _schedules.StepPlan(
        alpha=plan.alpha.copy(),
        beta=beta,
        gamma=gamma,
        batch=plan.batch.copy(),
        epoch_of_step=plan.epoch_of_step.copy(),
        T=plan.T.copy(),
        K=plan.K,
        M=plan.M,
        n=plan.n,
        batch_clamped=plan.batch_clamped,
    )


def initial_point(cfg: RunConfig, dim: int, seed: int) -> np.ndarray:
    base = seed if cfg.init_mode == "per_seed" else cfg.init_seed
    g = np.random.default_rng((base ^ _X0_SALT) & MASK64)
    return cfg.init_scale * g.standard_normal(dim)


@dataclass
class SeedResult:
    seed: int
    rows: list[dict]
    diverged: bool
    wall_time: float
    max_d_norm: float
    max_m_norm: float
    g_empirical: float | None = None

    @property
    def final(self) -> dict:
        return self.rows[-1] if self.rows else {}


def run_trajectory(
    problem: _problems.FiniteSumProblem,
    plan: _schedules.StepPlan,
    optimizer: str,
    seed: int,
    x0: np.ndarray,
    *,
    log_every: int = 1,
    diverge_threshold: float = DIVERGE_THRESHOLD,
    track_g_empirical: bool = False,
) -> SeedResult:
    """One seeded optimization run over the plan's epochs.

    The seed drives only the sampling stream; x0 is supplied by the caller.
    With ``track_g_empirical``, the max per-sample gradient norm is scanned at
    every logged iterate (a trajectory-local stand-in for G on problems with
    no global bound).
    """
    t_start = time.perf_counter()
    x = np.array(x0, dtype=np.float64)
    d = np.zeros_like(x)
    state = seed & MASK64
    eff = effective_plan(plan, optimizer)
    starts = np.concatenate(([0], np.cumsum(plan.T)[:-1]))

    rows: list[dict] = []
    min_gn = math.inf
    diverged = False
    max_d_all = 0.0
    max_m_all = 0.0
    g_emp = (
        float(problem.per_sample_grad_norms(x).max()) if track_g_empirical else None
    )
    beta_prev = None  # previous epoch's beta, for the schedule-aware SHB map
    steps_done = 0
    for m in range(plan.M):
        s = int(starts[m])
        alpha = float(eff.alpha[s])
        beta = float(eff.beta[s])
        gamma = float(eff.gamma[s])
        b = int(plan.batch[s])
        T = int(plan.T[m])
        if optimizer == "shb":
            # Trajectory-preserving conversion; when beta changes across
            # epochs the SHB buffer normalization m_hat = m/(1-beta) shifts,
            # so the step crossing the boundary carries the momentum
            # coefficient beta*(1-beta_prev)/(1-beta) (constant beta reduces
            # to shb_equivalent).
            a_hat, _ = shb_equivalent(alpha, beta)
            d_norm = m_norm = 0.0
            T_rest = T
            if beta_prev is not None and beta_prev != beta and T > 0:
                b_cross = beta * (1.0 - beta_prev) / (1.0 - beta)
                state, d_norm, m_norm = engine.run_epoch(
                    problem, x, d, state,
                    alpha=a_hat, beta=b_cross, gamma=1.0, b=b, T=1,
                    algo=engine.ALGO_SHB,
                )
                T_rest = T - 1
            if T_rest > 0:
                state, dn2, mn2 = engine.run_epoch(
                    problem, x, d, state,
                    alpha=a_hat, beta=beta, gamma=1.0, b=b, T=T_rest,
                    algo=engine.ALGO_SHB,
                )
                d_norm = max(d_norm, dn2)
                m_norm = max(m_norm, mn2)
            beta_prev = beta
        else:
            state, d_norm, m_norm = engine.run_epoch(
                problem, x, d, state,
                alpha=alpha, beta=beta, gamma=gamma, b=b, T=T,
                algo=engine.ALGO_QHM,
            )
        steps_done += T
        max_d_all = max(max_d_all, d_norm)
        max_m_all = max(max_m_all, m_norm)
        if (m % log_every == 0) or m == plan.M - 1:
            loss = problem.loss(x)
            gn = float(np.linalg.norm(problem.full_grad(x)))
            if math.isfinite(gn):
                min_gn = min(min_gn, gn)
            if track_g_empirical:
                g_here = float(problem.per_sample_grad_norms(x).max())
                if math.isfinite(g_here):
                    g_emp = max(g_emp, g_here)
            rows.append(
                {
                    "epoch": m,
                    "step": steps_done,
                    "loss": loss,
                    "full_grad_norm": gn,
                    "min_full_grad_norm": min_gn,
                    "alpha": alpha,
                    "beta": beta,
                    "gamma": gamma,
                    "batch": b,
                }
            )
            if not math.isfinite(loss) or abs(loss) > diverge_threshold:
                diverged = True
                break
    return SeedResult(
        seed=seed,
        rows=rows,
        diverged=diverged,
        wall_time=time.perf_counter() - t_start,
        max_d_norm=max_d_all,
        max_m_norm=max_m_all,
        g_empirical=g_emp,
    )


def _write_seed_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])


AGG_METRICS = ("loss", "full_grad_norm", "min_full_grad_norm")


def aggregate_rows(results: list[SeedResult]) -> list[dict]:
    """Per-epoch mean/min/max across seeds, over epochs present in every seed."""
    n_common = min(len(r.rows) for r in results)
    out = []
    for i in range(n_common):
        base = results[0].rows[i]
        row = {
            "epoch": base["epoch"],
            "step": base["step"],
            "alpha": base["alpha"],
            "beta": base["beta"],
            "gamma": base["gamma"],
            "batch": base["batch"],
        }
        for metric in AGG_METRICS:
            vals = [r.rows[i][metric] for r in results]
            row[f"{metric}_mean"] = float(np.mean(vals))
            row[f"{metric}_min"] = float(np.min(vals))
            row[f"{metric}_max"] = float(np.max(vals))
        out.append(row)
    return out


AGG_COLUMNS = ("epoch", "step", "alpha", "beta", "gamma", "batch") + tuple(
    f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "min", "max")
)


def _write_aggregate_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AGG_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in AGG_COLUMNS])


def build_bound_report(
    cfg: RunConfig,
    problem: _problems.FiniteSumProblem,
    plan: _schedules.StepPlan,
    *,
    empirical_min_grad_sq: float | None = None,
    g_empirical: float | None = None,
) -> dict:
    """Exact sums, corollary bounds, theorem RHS, and domination verdicts."""
    eff = effective_plan(plan, cfg.optimizer)
    c = problem.constants
    report: dict = {
        "K": plan.K,
        "M": plan.M,
        "n": plan.n,
        "batch_clamped": plan.batch_clamped,
        "empirical_min_grad_sq": empirical_min_grad_sq,
    }
    dominations: dict[str, bool] = {}
    slack = 1.0 + 1e-12

    sums1 = _bounds.exact_sums_thm1(eff)
    thm1: dict = {"exact": sums1, "rhs": None, "notes": []}
    alpha_max = float(eff.alpha.max())
    gb_bar = float((eff.gamma * eff.beta).max())
    g2 = None if c.G is None else float(c.G) ** 2
    if g2 is None and g_empirical is not None:
        g2 = float(g_empirical) ** 2
        thm1["notes"].append("G taken from trajectory-local sup ||grad f_i||")
    if c.L is None or c.sigma2 is None or c.f_star is None:
        thm1["notes"].append("analytic constants incomplete; RHS skipped")
    elif alpha_max * c.L >= 2:
        thm1["notes"].append("alpha_max * L >= 2: outside theorem stepsize range")
    elif gb_bar >= 1:
        thm1["notes"].append("sup gamma*beta >= 1: outside theorem range")
    else:
        x0 = initial_point(cfg, problem.dim, cfg.seeds[0])
        df = problem.loss(x0) - c.f_star
        consts = _bounds.Thm1Constants(
            f0_minus_fstar=max(df, 0.0),
            L=c.L,
            sigma2=c.sigma2,
            gb_bar=gb_bar,
            alpha_max=alpha_max,
            G2=g2,
        )
        if sums1["C_K"] > 0 and g2 is None:
            thm1["notes"].append("C_K > 0 but no gradient bound G; RHS skipped")
        else:
            thm1["rhs"] = _bounds.thm1_rhs(consts, sums1)
            if empirical_min_grad_sq is not None:
                dominations["thm1_empirical"] = (
                    empirical_min_grad_sq <= thm1["rhs"] * slack
                )
    report["thm1"] = thm1

    try:
        up1 = _bounds.corollary1_upper(cfg.specs, plan.n, plan.K)
        cor1 = {
            "covered": True,
            "A_up": up1.A_up,
            "B_up": up1.B_up,
            "C_up": up1.C_up,
            "note": up1.note,
        }
        dominations["cor1_A"] = sums1["A_K"] <= up1.A_up * slack
        dominations["cor1_B"] = sums1["B_K"] <= up1.B_up * slack
        if up1.C_up is not None:
            dominations["cor1_C"] = sums1["C_K"] <= up1.C_up * slack
        if plan.batch_clamped:
            cor1["note"] = (cor1["note"] or "") + " [batch clamped at n within horizon]"
    except _bounds.NotCoveredError as exc:
        cor1 = {"covered": False, "note": str(exc)}
    report["corollary1"] = cor1

    thm2: dict = {"condition_ok": True, "first_violation": None, "exact": None, "rhs": None}
    viol = _schedules.first_thm2_violation(eff)
    if viol is not None:
        thm2["condition_ok"] = False
        thm2["first_violation"] = viol
    else:
        sums2 = _bounds.exact_sums_thm2(eff)
        thm2["exact"] = sums2
        if None not in (c.L, c.sigma2, c.f_star) and g2 is not None:
            x0 = initial_point(cfg, problem.dim, cfg.seeds[0])
            df = max(problem.loss(x0) - c.f_star, 0.0)
            thm2["rhs"] = _bounds.thm2_rhs(
                _bounds.Thm2Constants(
                    f0_minus_fstar=df, sigma2=c.sigma2, L=c.L, G2=g2
                ),
                sums2,
            )
            if empirical_min_grad_sq is not None:
                dominations["thm2_empirical"] = (
                    empirical_min_grad_sq <= thm2["rhs"] * slack
                )
    report["thm2"] = thm2

    try:
        up2 = _bounds.corollary2_upper(cfg.specs, plan.n, plan.K)
        cor2 = {
            "covered": True,
            "A_up": up2.A_up,
            "B_up": up2.B_up,
            "C_up": up2.C_up,
            "D_up": up2.D_up,
            "bound_diverges": up2.bound_diverges,
            "note": up2.note,
        }
        if not thm2["condition_ok"]:
            dominations["thm2_condition"] = False
            cor2["note"] = (
                (cor2["note"] or "")
                + f" [theorem hypothesis fails first at step {viol}]"
            )
        else:
            sums2 = thm2["exact"]
            dominations["cor2_A"] = sums2["A_K"] <= up2.A_up * slack
            dominations["cor2_B"] = sums2["B_K"] <= up2.B_up * slack
            dominations["cor2_C"] = sums2["C_K"] <= up2.C_up * slack
            dominations["cor2_D"] = sums2["D_K"] <= up2.D_up * slack
    except _bounds.NotCoveredError as exc:
        cor2 = {"covered": False, "note": str(exc)}
    report["corollary2"] = cor2

    asym = _schedules.validate_asymptotic(cfg.specs)
    report["asymptotic"] = {
        "thm1_ok": asym.thm1_ok,
        "thm2_ok": asym.thm2_ok,
        "reasons": list(asym.reasons),
    }
    report["dominations"] = dominations
    report["all_dominations_hold"] = all(dominations.values()) if dominations else True
    return report


@dataclass
class RunOutput:
    config: RunConfig
    results: list[SeedResult]
    out_dir: Path
    summary: dict

    @property
    def diverged(self) -> bool:
        return any(r.diverged for r in self.results)


def run(cfg: RunConfig, out_dir=None, quiet: bool = True) -> RunOutput:
    """Execute every seed, write per-seed CSVs, aggregate CSV, and summary."""
    out = Path(out_dir if out_dir is not None else (cfg.output_dir or f"runs/{cfg.hash}"))
    out.mkdir(parents=True, exist_ok=True)
    problem = cfg.make_problem()
    plan = cfg.make_plan(problem.n)

    track_g = problem.constants.G is None
    results = []
    for seed in cfg.seeds:
        x0 = initial_point(cfg, problem.dim, seed)
        res = run_trajectory(
            problem,
            plan,
            cfg.optimizer,
            seed,
            x0,
            log_every=cfg.log_every,
            track_g_empirical=track_g,
        )
        _write_seed_csv(out / f"seed_{seed}.csv", res.rows)
        if not quiet:
            last = res.final
            print(
                f"seed {seed}: epochs={len(res.rows)} loss={last.get('loss'):.6g} "
                f"min||grad||={last.get('min_full_grad_norm'):.6g}"
                + (" DIVERGED" if res.diverged else "")
            )
        results.append(res)

    agg = aggregate_rows(results)
    _write_aggregate_csv(out / "aggregate.csv", agg)

    emp = None
    finite_mins = [
        r.final["min_full_grad_norm"] for r in results if r.rows and not r.diverged
    ]
    if finite_mins and len(finite_mins) == len(results):
        emp = float(np.mean([v**2 for v in finite_mins]))

    g_emp = None
    if track_g:
        g_emp = max(r.g_empirical for r in results if r.g_empirical is not None)

    report = build_bound_report(
        cfg, problem, plan, empirical_min_grad_sq=emp, g_empirical=g_emp
    )
    summary = {
        "config": cfg.normalized,
        "config_hash": cfg.hash,
        "engine": engine.ACTIVE,
        "diverged": any(r.diverged for r in results),
        "per_seed": {
            str(r.seed): {
                "diverged": r.diverged,
                "epochs_logged": len(r.rows),
                "final_loss": r.final.get("loss"),
                "final_min_full_grad_norm": r.final.get("min_full_grad_norm"),
                "max_d_norm": r.max_d_norm,
                "max_m_norm": r.max_m_norm,
                "wall_time_s": r.wall_time,
            }
            for r in results
        },
        "bound_report": report,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunOutput(config=cfg, results=results, out_dir=out, summary=summary)


def _apply_override(raw: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def sweep(base_raw: dict, grid: dict, out_dir, quiet: bool = True) -> dict:
    """Cartesian-product runs over dotted-path override lists.

    Per-cell failures are isolated and recorded; the leaderboard ranks
    completed cells by mean final min_full_grad_norm (ties: final loss, then
    config hash).
    """
    if not isinstance(grid, dict) or not grid:
        raise ConfigError(["grid: need a non-empty object of dotted-path lists"])
    for key, vals in grid.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigError([f"grid.{key}: need a non-empty list"])

    keys = sorted(grid)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells: list[dict] = [{}]
    for key in keys:
        cells = [dict(c, **{key: v}) for c in cells for v in grid[key]]

    entries = []
    failures = []
    for cell in cells:
        raw = copy.deepcopy(base_raw)
        for key, value in cell.items():
            _apply_override(raw, key, value)
        try:
            cfg = parse_config(raw)
            res = run(cfg, out_dir=out / f"cell_{config_hash(cfg.normalized)}", quiet=quiet)
            finals = [r.final.get("min_full_grad_norm", math.inf) for r in res.results]
            losses = [r.final.get("loss", math.inf) for r in res.results]
            entries.append(
                {
                    "overrides": cell,
                    "config_hash": cfg.hash,
                    "diverged": res.diverged,
                    "final_min_full_grad_norm": float(np.mean(finals)),
                    "final_loss": float(np.mean(losses)),
                    "dir": str(res.out_dir),
                }
            )
        except Exception as exc:  # isolate per-cell failures
            failures.append({"overrides": cell, "error": f"{type(exc).__name__}: {exc}"})

    def sort_key(e):
        return (
            e["diverged"],
            e["final_min_full_grad_norm"],
            e["final_loss"],
            e["config_hash"],
        )

    leaderboard = {
        "ranking": sorted(entries, key=sort_key),
        "failures": failures,
        "grid": grid,
    }
    with open(out / "leaderboard.json", "w") as fh:
        json.dump(leaderboard, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return leaderboard


def bounds_only(cfg: RunConfig, out_dir=None) -> tuple[dict, int]:
    """Expand the plan and evaluate every applicable bound without training.

    Exit status: 0 when all applicable dominations hold (non-covered entries
    are marked n/a and do not fail), 4 otherwise.
    """
    problem = cfg.make_problem()
    plan = cfg.make_plan(problem.n)
    report = build_bound_report(cfg, problem, plan)
    if out_dir is not None:
        outp = Path(out_dir)
        outp.mkdir(parents=True, exist_ok=True)
        with open(outp / "bound_report.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    code = 0 if report["all_dominations_hold"] else 4
    return report, code
