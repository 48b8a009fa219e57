"""CLI: ``plots --job job.json`` or ``plots a.csv b.csv --metric loss``.

Positional CSVs get labels from their parent directory names (or file stems).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .render import METRICS, PlotError, PlotJob, SeriesSpec, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plots")
    ap.add_argument("csvs", nargs="*", help="aggregate CSV paths")
    ap.add_argument("--job", help="JSON job description (overrides positionals)")
    ap.add_argument("--metric", default="min_full_grad_norm", choices=METRICS)
    ap.add_argument("--y-scale", default="linear", choices=("linear", "log"))
    ap.add_argument("--out", default="figure.png")
    ap.add_argument("--title", default=None)
    args = ap.parse_args(argv)

    try:
        if args.job:
            with open(args.job) as fh:
                job = PlotJob.from_dict(json.load(fh))
        else:
            if not args.csvs:
                ap.error("need --job or at least one CSV path")
            labels = []
            for p in args.csvs:
                path = Path(p)
                label = path.parent.name or path.stem
                if label in labels:
                    label = f"{label}/{path.stem}"
                labels.append(label)
            job = PlotJob(
                inputs=tuple(
                    SeriesSpec(path=p, label=l) for p, l in zip(args.csvs, labels)
                ),
                metric=args.metric,
                y_scale=args.y_scale,
                output=args.out,
                title=args.title,
            )
        written = render(job)
    except (PlotError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
