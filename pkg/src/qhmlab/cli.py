"""Command-line entry point.

Subcommands:

  run      execute a config: per-seed CSVs + aggregate CSV + summary JSON
  sweep    cartesian grid of config overrides + leaderboard JSON
  bounds   evaluate schedules/bounds only (no training); exit 4 if any
           applicable domination fails
  convert  SHB <-> NSHB hyperparameter conversion utility

Exit codes: 0 success, 2 config error, 3 runtime divergence, 4 bound
domination failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .optim import nshb_from_shb, shb_from_nshb


def _add_common(p):
    p.add_argument("--config", required=True, help="path to JSON config")
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def _parse_seeds(text):
    return [int(s) for s in text.split(",") if s]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qhmlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    _add_common(p_run)
    p_run.add_argument("--seeds", default=None, help="comma-separated seed override")

    p_sweep = sub.add_parser("sweep", help="grid sweep over config overrides")
    _add_common(p_sweep)

    p_bounds = sub.add_parser("bounds", help="evaluate bounds without training")
    _add_common(p_bounds)

    p_conv = sub.add_parser("convert", help="SHB <-> NSHB hyperparameter conversion")
    direction = p_conv.add_mutually_exclusive_group(required=True)
    direction.add_argument("--to-shb", action="store_true",
                           help="interpret --alpha/--beta as NSHB and convert to SHB")
    direction.add_argument("--to-nshb", action="store_true",
                           help="interpret --alpha/--beta as SHB and convert to NSHB")
    p_conv.add_argument("--alpha", type=float, required=True)
    p_conv.add_argument("--beta", type=float, required=True)

    args = parser.parse_args(argv)

    if args.command == "convert":
        try:
            if args.to_shb:
                a, b = shb_from_nshb(args.alpha, args.beta)
                out = {"direction": "nshb->shb", "alpha": a, "beta": b}
            else:
                a, b = nshb_from_shb(args.alpha, args.beta)
                out = {"direction": "shb->nshb", "alpha": a, "beta": b}
        except (ValueError, ZeroDivisionError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(json.dumps(out))
        return 0

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    if args.command == "sweep":
        base = raw.get("base")
        grid = raw.get("grid")
        if not isinstance(raw, dict) or set(raw) - {"base", "grid"} or base is None:
            print("error: sweep config needs exactly {base, grid}", file=sys.stderr)
            return 2
        try:
            harness.parse_config(base)  # validate base before sweeping
            board = harness.sweep(base, grid, args.out or "sweep_out", quiet=args.quiet)
        except harness.ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if not args.quiet:
            for e in board["ranking"]:
                print(
                    f"{e['config_hash']}  min||grad||={e['final_min_full_grad_norm']:.6g}"
                    f"  loss={e['final_loss']:.6g}  {e['overrides']}"
                )
            if board["failures"]:
                print(f"{len(board['failures'])} cell(s) failed", file=sys.stderr)
        return 0

    try:
        cfg = harness.parse_config(raw)
        if args.command == "run" and args.seeds:
            raw = dict(raw, seeds=_parse_seeds(args.seeds))
            cfg = harness.parse_config(raw)
    except harness.ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2

    if args.command == "bounds":
        report, code = harness.bounds_only(cfg, out_dir=args.out)
        if not args.quiet:
            print(json.dumps(report, indent=2, sort_keys=True))
        if code != 0:
            bad = [k for k, v in report["dominations"].items() if not v]
            print(f"domination failure: {bad}", file=sys.stderr)
            if not report["thm2"]["condition_ok"]:
                print(
                    "thm2 hypothesis beta_k*(alpha_k/2+1) <= 1 fails first at "
                    f"step {report['thm2']['first_violation']}",
                    file=sys.stderr,
                )
        return code

    res = harness.run(cfg, out_dir=args.out, quiet=args.quiet)
    if not args.quiet:
        print(f"wrote {res.out_dir} (config {cfg.hash})")
    return 3 if res.diverged else 0


if __name__ == "__main__":
    sys.exit(main())
