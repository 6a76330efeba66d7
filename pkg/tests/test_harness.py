import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tsmtl.data import SyntheticSpec, generate_synthetic
from tsmtl.errors import AllRunsDivergedError, InvalidParameterError, SchemaError
from tsmtl.harness import (
    ExperimentConfig,
    SummaryRow,
    aggregate,
    config_to_text,
    emit_summary_csv,
    emit_trace_csv,
    grid_search,
    load_config,
    parse_config_text,
    plot_svg,
    read_summary_csv,
    read_trace_csv,
    run_sweep,
    summarize_trace,
    trace_filename,
)
from tsmtl.solvers import TraceRecord

SVG = "{http://www.w3.org/2000/svg}"


def small_config(tmp_path, **kw):
    opts = dict(synth_p=3, synth_T=3, synth_n=12, rho_grid=(1.0,), repeats=1, max_iters=30,
                lambda1=0.1, lambda2=0.1, lambda3=0.1, output_dir=str(tmp_path / "out"),
                serial=True, timing=False)
    opts.update(kw)
    return ExperimentConfig(**opts)


def rec(i, r, v=None):
    return TraceRecord(i, 1.0 / i, r / 3, r / 3, r / 3, r, v, None)


class TestConfig:
    def test_defaults(self):
        c = ExperimentConfig()
        assert c.rho_grid == (0.001, 0.01, 0.1, 1.0, 10.0, 20.0, 30.0)
        assert (c.repeats, c.max_iters, c.lambda_points) == (10, 1000, 5)
        np.testing.assert_allclose(c.lambda_grid(), [0.1, 1, 10, 100, 1000])
        assert ExperimentConfig(seed=5, repeats=3).seeds() == [5, 6, 7]

    def test_parse_text(self):
        text = """
        # comment line
        rho_grid = 0.01, 1   # trailing comment
        repeats = 2
        variants = multi_block
        lambda1 = none
        rho1 = auto
        serial = true
        """
        v = parse_config_text(text)
        assert v == dict(rho_grid=(0.01, 1.0), repeats=2, variants=("multi_block",),
                         lambda1=None, rho1="auto", serial=True)

    @pytest.mark.parametrize("text", ["bogus = 1", "repeats 3", "repeats = x", "serial = maybe"])
    def test_parse_errors(self, text):
        with pytest.raises(SchemaError):
            parse_config_text(text)

    @pytest.mark.parametrize("kw", [dict(rho_grid=()), dict(repeats=0), dict(variants=("x",)),
                                    dict(source="air_quality"), dict(rho1=-1.0),
                                    dict(lambda_min=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig(**kw)

    def test_file_and_overrides(self, tmp_path):
        f = tmp_path / "c.conf"
        f.write_text("repeats = 4\nmax_iters = 50\n")
        c = load_config(f, max_iters=7)
        assert (c.repeats, c.max_iters) == (4, 7)

    def test_text_round_trip(self):
        c = ExperimentConfig(rho_grid=(0.5, 2.0), lambda1=0.3, serial=True)
        assert load_config(None, **parse_config_text(config_to_text(c))) == c


class TestGridSearch:
    def test_single_point(self, tmp_path):
        c = small_config(tmp_path, lambda_min=2.0, lambda_max=2.0, lambda_points=1)
        res = grid_search(c)
        assert res.best == (2.0, 2.0, 2.0) and len(res.table) == 1

    def test_argmin_of_emitted_table(self, tmp_path):
        c = small_config(tmp_path, lambda_min=0.1, lambda_max=10.0, lambda_points=3,
                         max_iters=100)
        table = tmp_path / "grid.csv"
        res = grid_search(c, table_path=table)
        lines = table.read_text().splitlines()
        assert lines[0] == "lambda1,lambda2,lambda3,val_nmse,diverged"
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 27
        scored = [(float(r[3]), tuple(-float(v) for v in r[:3])) for r in rows if r[3]]
        best = min(scored)
        assert res.best == tuple(-v for v in best[1])

    def test_ties_prefer_stronger(self, tmp_path):
        # huge lambdas shrink everything to zero, so every point scores the same
        c = small_config(tmp_path, lambda_min=1e6, lambda_max=1e7, lambda_points=2)
        res = grid_search(c)
        scores = {row[3] for row in res.table}
        assert len(scores) == 1
        assert res.best == (1e7, 1e7, 1e7)

    def test_divergent_point_excluded(self, tmp_path, monkeypatch):
        import tsmtl.harness as h

        real_run = h.run

        def fake_run(train, hyper, W, variant, **kw):
            out = real_run(train, hyper, W, variant, **kw)
            if hyper.lambda1 < 1:
                out.diverged = True
            return out

        monkeypatch.setattr(h, "run", fake_run)
        c = small_config(tmp_path, lambda_min=0.1, lambda_max=10.0, lambda_points=2)
        res = grid_search(c)
        assert res.best[0] == 10.0
        assert all(row[3] is None for row in res.table if row[0] < 1)

        monkeypatch.setattr(h, "run", lambda *a, **k: _diverged(real_run(*a, **k)))
        with pytest.raises(AllRunsDivergedError):
            grid_search(c)


def _diverged(res):
    res.diverged = True
    return res


class TestSummaries:
    def test_last_window(self):
        trace = [rec(i, float(i), v=2.0 * i) for i in range(1, 151)]
        row = summarize_trace(trace, "two_block", 1.0, 0, False)
        tail = np.arange(51, 151, dtype=float)
        assert row.r_total_mean == pytest.approx(tail.mean(), abs=1e-12)
        assert row.r_total_std == pytest.approx(tail.std(), abs=1e-12)
        assert row.val_nmse_mean == pytest.approx(2 * tail.mean(), abs=1e-12)
        assert row.final_objective == 1 / 150

    def test_short_and_empty(self):
        row = summarize_trace([rec(1, 3.0)], "multi_block", 0.1, 2, True)
        assert (row.r_total_mean, row.r_total_std, row.val_nmse_mean) == (3.0, 0.0, None)
        empty = summarize_trace([], "multi_block", 0.1, 2, True)
        assert empty.r_total_mean is None and empty.diverged

    def test_trace_csv_round_trip(self, tmp_path):
        trace = [TraceRecord(1, 0.1 + 0.2, 1e-300, 3.0, 1 / 3, 7e-17, None, 0.5),
                 TraceRecord(2, -1.5, 0.0, 2.0, 1e20, 2.2, 0.123456789012345678, None)]
        f = tmp_path / "t.csv"
        emit_trace_csv(trace, f)
        lines = f.read_text().splitlines()
        assert lines[0] == "iter,objective,r_eq,r_smooth,r_pi,r_total,val_nmse,elapsed_seconds"
        assert len(lines) == 3
        assert read_trace_csv(f) == trace

    def test_one_record_csv(self, tmp_path):
        f = tmp_path / "t.csv"
        emit_trace_csv([rec(1, 1.0)], f)
        assert len(f.read_text().splitlines()) == 2

    def test_summary_csv_round_trip(self, tmp_path):
        rows = [SummaryRow("two_block", 0.001, 0, 1e-3, 0.0, None, None, 3.5, False),
                SummaryRow("multi_block", 30.0, 9, None, None, None, None, None, True)]
        f = tmp_path / "s.csv"
        emit_summary_csv(rows, f)
        assert f.read_text().splitlines()[0] == (
            "variant,rho,repeat,r_total_mean,r_total_std,val_nmse_mean,val_nmse_std,"
            "final_objective,diverged")
        assert read_summary_csv(f) == rows

    def test_bad_header(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError):
            read_trace_csv(f)
        with pytest.raises(SchemaError):
            read_summary_csv(f)

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            emit_trace_csv([rec(1, 1.0)], tmp_path / "missing" / "t.csv")

    def test_aggregate(self):
        rows = [SummaryRow("a", 1.0, i, float(i), 0.0, None, None, 0.0, False) for i in range(3)]
        agg = aggregate(rows)
        assert agg[("a", 1.0)] == (1.0, pytest.approx(np.std([0, 1, 2])))
        assert aggregate(rows, "val_nmse_mean")[("a", 1.0)] == (None, None)


class TestSweep:
    def test_single_run(self, tmp_path):
        c = small_config(tmp_path, variants=("two_block",))
        rows = run_sweep(c)
        traces = list((tmp_path / "out" / "traces").iterdir())
        assert len(rows) == 1 and len(traces) == 1
        assert traces[0].name == trace_filename("two_block", 1.0, 0) == "trace_two_block_rho1_rep0.csv"
        assert read_summary_csv(tmp_path / "out" / "summary.csv") == rows

    def test_summary_matches_traces(self, tmp_path):
        c = small_config(tmp_path, rho_grid=(0.1, 1.0), repeats=2, max_iters=120)
        rows = run_sweep(c)
        for row in rows:
            trace = read_trace_csv(tmp_path / "out" / "traces"
                                   / trace_filename(row.variant, row.rho, row.repeat))
            r = np.array([t.r_total for t in trace[-100:]])
            v = np.array([t.val_nmse for t in trace[-100:]])
            assert abs(r.mean() - row.r_total_mean) <= 1e-12 * max(1, abs(r.mean()))
            assert abs(r.std() - row.r_total_std) <= 1e-12 * max(1, r.std())
            assert abs(v.mean() - row.val_nmse_mean) <= 1e-12
            assert abs(v.std() - row.val_nmse_std) <= 1e-12

    def test_stable_ordering(self, tmp_path):
        c = small_config(tmp_path, rho_grid=(10.0, 0.1, 1.0), repeats=2,
                         variants=("multi_block", "two_block"))
        rows = run_sweep(c)
        assert [(r.variant, r.rho, r.repeat) for r in rows] == [
            (v, rho, rep) for v in ("multi_block", "two_block")
            for rho in (10.0, 0.1, 1.0) for rep in (0, 1)]

    def test_validation_toggle(self, tmp_path):
        a = run_sweep(small_config(tmp_path / "a"))
        b = run_sweep(small_config(tmp_path / "b", use_validation=False))
        for ra, rb in zip(a, b):
            assert rb.val_nmse_mean is None and ra.val_nmse_mean is not None
            assert (ra.r_total_mean, ra.r_total_std, ra.final_objective) == (
                rb.r_total_mean, rb.r_total_std, rb.final_objective)
        ta = read_trace_csv(tmp_path / "a" / "out" / "traces" / trace_filename("two_block", 1.0, 0))
        tb = read_trace_csv(tmp_path / "b" / "out" / "traces" / trace_filename("two_block", 1.0, 0))
        assert [t.r_total for t in ta] == [t.r_total for t in tb]
        assert all(t.val_nmse is None for t in tb)

    def test_serial_deterministic(self, tmp_path):
        run_sweep(small_config(tmp_path / "a", repeats=2))
        run_sweep(small_config(tmp_path / "b", repeats=2))
        a, b = tmp_path / "a" / "out", tmp_path / "b" / "out"
        assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
        for f in (a / "traces").iterdir():
            assert f.read_bytes() == (b / "traces" / f.name).read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        run_sweep(small_config(tmp_path / "a", repeats=2))
        run_sweep(small_config(tmp_path / "b", repeats=2, serial=False, workers=2))
        a, b = tmp_path / "a" / "out", tmp_path / "b" / "out"
        assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()

    def test_divergence_recorded(self, tmp_path):
        c = small_config(tmp_path, synth_p=5, synth_T=4, synth_n=20, rho1=1e-3,
                         variants=("two_block",), max_iters=3000,
                         lambda1=0.1, lambda2=0.1, lambda3=0.1)
        data, _ = generate_synthetic(SyntheticSpec(5, 4, seed=7))
        rows = run_sweep(c, data=data)
        assert rows[0].diverged
        text = (tmp_path / "out" / "traces" / trace_filename("two_block", 1.0, 0)).read_text()
        assert "nan" not in text.lower() and "inf" not in text.lower()
        summary = (tmp_path / "out" / "summary.csv").read_text().lower()
        assert "nan" not in summary and "inf" not in summary
        assert np.isfinite(rows[0].r_total_std)

    def test_runs_grid_search_when_lambdas_missing(self, tmp_path):
        c = small_config(tmp_path, lambda1=None, lambda_min=5.0, lambda_max=5.0, lambda_points=1)
        rows = run_sweep(c)
        assert len(rows) == 2


class TestPlots:
    def test_line_plot_one_polyline_per_series(self, tmp_path):
        traces = {"two_block": [rec(i, 10.0 ** -i) for i in range(1, 20)],
                  "multi_block": [rec(i, 10.0 ** -(2 * i)) for i in range(1, 20)],
                  "third": [rec(i, 1.0) for i in range(1, 5)]}
        f = tmp_path / "p.svg"
        plot_svg(traces, f, metric="r_total")
        root = ET.parse(f).getroot()
        assert root.tag == SVG + "svg"
        lines = root.findall(f"{SVG}polyline")
        assert len(lines) == 3
        assert [p.find(f"{SVG}title").text for p in lines] == list(traces)

    def test_bar_chart(self, tmp_path):
        rows = [SummaryRow(v, rho, rep, 1e-3 * (rep + 1), 1e-4, 0.5, 0.01, 1.0, False)
                for v in ("two_block", "multi_block") for rho in (0.1, 1.0) for rep in range(3)]
        f = tmp_path / "b.svg"
        plot_svg(rows, f, metric="r_total")
        root = ET.parse(f).getroot()
        bars = [r for r in root.iter(f"{SVG}rect") if r.find(f"{SVG}title") is not None]
        assert len(bars) == 4
        assert len(root.findall(f"{SVG}line")) == 4
        plot_svg(rows, tmp_path / "n.svg", metric="val_nmse")
        ET.parse(tmp_path / "n.svg")

    def test_empty_inputs(self, tmp_path):
        with pytest.raises(InvalidParameterError):
            plot_svg({}, tmp_path / "x.svg")
        with pytest.raises(InvalidParameterError):
            plot_svg([], tmp_path / "x.svg")
        with pytest.raises(InvalidParameterError):
            plot_svg({"a": []}, tmp_path / "x.svg")

    def test_title_escaped(self, tmp_path):
        f = tmp_path / "p.svg"
        plot_svg({"a<b": [rec(1, 1.0), rec(2, 0.5)]}, f, title="x & y")
        ET.parse(f)


@pytest.mark.slow
def test_sweep_example_multi_block_lower_residual(tmp_path):
    # benchmark instance of the acceptance suite, lambdas as chosen by its grid search
    c = ExperimentConfig(rho_grid=(0.01, 1.0), repeats=10, max_iters=1000,
                         lambda1=0.1, lambda2=0.1, lambda3=0.1,
                         output_dir=str(tmp_path), serial=True, timing=False)
    agg = aggregate(run_sweep(c), "r_total_mean")
    for rho in c.rho_grid:
        assert agg[("multi_block", rho)][0] < agg[("two_block", rho)][0], rho
