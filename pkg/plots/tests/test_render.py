"""Rendering contract: band edges equal the CSV min/max columns exactly,
SVG structure matches the job (curve count, axis labels), deterministic
output, and error paths write nothing."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qhmplots import PlotJob, SeriesSpec, load_series, render
from qhmplots.cli import main as cli_main
from qhmplots.render import PlotError

HEADER = (
    "epoch,step,alpha,beta,gamma,batch,"
    "loss_mean,loss_min,loss_max,"
    "full_grad_norm_mean,full_grad_norm_min,full_grad_norm_max,"
    "min_full_grad_norm_mean,min_full_grad_norm_min,min_full_grad_norm_max"
)


def write_aggregate(path, epochs, seed, scale=1.0):
    """Synthetic aggregate CSV in the harness schema."""
    rng = np.random.default_rng(seed)
    lines = [HEADER]
    mins = None
    for m in range(epochs):
        gn = scale * np.exp(-0.05 * m) * (1 + 0.2 * rng.standard_normal(3))
        gn = np.abs(gn) + 1e-6
        mins = gn if mins is None else np.minimum(mins, gn)
        loss = 1.0 + gn
        row = [m, (m + 1) * 4, 0.05, 0.9, 0.7, 32]
        for vals in (loss, gn, mins):
            row += [f"{np.mean(vals):.17g}", f"{np.min(vals):.17g}", f"{np.max(vals):.17g}"]
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def three_csvs(tmp_path):
    paths = []
    for i, name in enumerate(("small_bs", "large_bs", "increasing_bs")):
        d = tmp_path / name
        d.mkdir()
        paths.append(write_aggregate(d / "aggregate.csv", 40, seed=i, scale=1.0 / (i + 1)))
    return paths


def svg_root(path):
    return ET.parse(path).getroot()


def svg_texts(root):
    ns = "{http://www.w3.org/2000/svg}"
    return [t.text for t in root.iter(f"{ns}text") if t.text]


def count_groups(root, fragment):
    ns = "{http://www.w3.org/2000/svg}"
    return sum(1 for g in root.iter(f"{ns}g") if fragment in g.get("id", ""))


class TestBandEdges:
    def test_band_edges_equal_csv_columns_exactly(self, three_csvs):
        spec = SeriesSpec(path=str(three_csvs[0]), label="a")
        series = load_series(spec, "min_full_grad_norm")
        raw = three_csvs[0].read_text().strip().splitlines()
        header = raw[0].split(",")
        lo_col = header.index("min_full_grad_norm_min")
        hi_col = header.index("min_full_grad_norm_max")
        lo = [float(r.split(",")[lo_col]) for r in raw[1:]]
        hi = [float(r.split(",")[hi_col]) for r in raw[1:]]
        assert series.lo.tolist() == lo  # exact: no smoothing/resampling
        assert series.hi.tolist() == hi


class TestRender:
    def test_three_curve_figure_structure(self, three_csvs, tmp_path):
        job = PlotJob(
            inputs=tuple(
                SeriesSpec(path=str(p), label=l)
                for p, l in zip(three_csvs, ("small", "large", "increasing"))
            ),
            metric="min_full_grad_norm",
            y_scale="log",
            output=str(tmp_path / "fig.png"),
        )
        written = render(job)
        assert {p.suffix for p in written} == {".png", ".svg"}
        assert all(p.exists() for p in written)
        root = svg_root(tmp_path / "fig.svg")
        # one mean line per input, plus one in each legend entry
        assert count_groups(root, "line2d_") >= 3
        assert count_groups(root, "PolyCollection_") == 3  # min-max bands
        texts = svg_texts(root)
        assert "epoch" in texts
        assert "min full gradient norm" in texts
        for label in ("small", "large", "increasing"):
            assert label in texts

    def test_single_csv_log_scale(self, three_csvs, tmp_path):
        job = PlotJob(
            inputs=(SeriesSpec(path=str(three_csvs[0]), label="only"),),
            metric="min_full_grad_norm",
            y_scale="log",
            output=str(tmp_path / "single.png"),
        )
        render(job)
        assert (tmp_path / "single.svg").exists()

    def test_deterministic_bytes(self, three_csvs, tmp_path):
        def once(stem):
            job = PlotJob(
                inputs=(SeriesSpec(path=str(three_csvs[1]), label="x"),),
                metric="loss",
                output=str(tmp_path / f"{stem}.png"),
            )
            render(job)
            return (
                (tmp_path / f"{stem}.png").read_bytes(),
                (tmp_path / f"{stem}.svg").read_bytes(),
            )

        png1, svg1 = once("first")
        png2, svg2 = once("second")
        assert png1 == png2
        assert svg1 == svg2

    def test_empty_csv_errors_without_output(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(HEADER + "\n")
        job = PlotJob(
            inputs=(SeriesSpec(path=str(empty), label="e"),),
            output=str(tmp_path / "out.png"),
        )
        with pytest.raises(PlotError, match="empty"):
            render(job)
        assert not (tmp_path / "out.png").exists()
        assert not (tmp_path / "out.svg").exists()

    def test_mismatched_epoch_grids_rejected(self, tmp_path):
        a = write_aggregate(tmp_path / "a.csv", 10, seed=0)
        b = write_aggregate(tmp_path / "b.csv", 12, seed=1)
        job = PlotJob(
            inputs=(SeriesSpec(str(a), "a"), SeriesSpec(str(b), "b")),
            output=str(tmp_path / "out.png"),
        )
        with pytest.raises(PlotError, match="epoch grids differ"):
            render(job)
        assert not (tmp_path / "out.png").exists()

    def test_missing_metric_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("epoch,loss_mean\n0,1.0\n")
        job = PlotJob(inputs=(SeriesSpec(str(bad), "b"),), metric="loss",
                      output=str(tmp_path / "o.png"))
        with pytest.raises(PlotError, match="loss_max"):
            render(job)


class TestJobValidation:
    def test_duplicate_labels_rejected(self, three_csvs):
        with pytest.raises(PlotError, match="unique"):
            PlotJob(
                inputs=(
                    SeriesSpec(str(three_csvs[0]), "same"),
                    SeriesSpec(str(three_csvs[1]), "same"),
                )
            )

    def test_unknown_keys_rejected(self):
        with pytest.raises(PlotError, match="unknown job keys"):
            PlotJob.from_dict({"inputs": [], "smoothing": 5})

    def test_bad_metric(self, three_csvs):
        with pytest.raises(PlotError, match="metric"):
            PlotJob(inputs=(SeriesSpec(str(three_csvs[0]), "x"),), metric="accuracy")


class TestCli:
    def test_job_file(self, three_csvs, tmp_path, capsys):
        job = {
            "inputs": [
                {"path": str(p), "label": l}
                for p, l in zip(three_csvs, ("s", "l", "i"))
            ],
            "metric": "min_full_grad_norm",
            "y_scale": "log",
            "output": str(tmp_path / "cli.png"),
        }
        jp = tmp_path / "job.json"
        jp.write_text(json.dumps(job))
        assert cli_main(["--job", str(jp)]) == 0
        out_lines = capsys.readouterr().out.strip().splitlines()
        assert len(out_lines) == 2
        assert (tmp_path / "cli.svg").exists()

    def test_positional_csvs(self, three_csvs, tmp_path):
        out = tmp_path / "pos.png"
        args = [str(p) for p in three_csvs] + ["--metric", "loss", "--out", str(out)]
        assert cli_main(args) == 0
        assert out.exists() and out.with_suffix(".svg").exists()

    def test_error_exit_code(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        assert cli_main([str(missing)]) == 1
        assert "error:" in capsys.readouterr().err
