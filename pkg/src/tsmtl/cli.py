"""Command-line driver: ``tsmtl {gen,gridsearch,sweep,plot,report}``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
runtime or data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness, plotting
from .data import SyntheticSpec, generate_synthetic, save_dataset
from .errors import SchemaError, TSMTLError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value configuration file")
    for name, ftype in harness.CONFIG_FIELDS.items():
        flag = "--" + name.replace("_", "-")
        if ftype == "bool":
            parser.add_argument(flag, dest=name, default=None, nargs="?", const="true",
                                metavar="BOOL")
        else:
            parser.add_argument(flag, dest=name, default=None, metavar="VALUE")


def _config_from_args(args) -> harness.ExperimentConfig:
    overrides = {}
    for name, ftype in harness.CONFIG_FIELDS.items():
        raw = getattr(args, name, None)
        if raw is not None:
            try:
                overrides[name] = harness._convert(ftype, raw)
            except ValueError as exc:
                raise UsageError(f"--{name.replace('_', '-')}: {exc}") from None
    try:
        return harness.load_config(args.config, **overrides)
    except (SchemaError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    spec = SyntheticSpec(p=args.p, T=args.T, n_per_task=args.n, noise_std=args.noise_std,
                         row_sparsity=args.row_sparsity, jump_sparsity=args.jump_sparsity,
                         seed=args.seed)
    data, theta = generate_synthetic(spec)
    save_dataset(args.out, data, seed=args.seed, theta_true=theta)
    print(f"wrote {args.out}: p={data.p}, T={data.T}, counts={data.counts}")
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    config = _config_from_args(args)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = harness.grid_search(config, table_path=out / "gridsearch.csv")
    l1, l2, l3 = result.best
    (out / "lambdas.conf").write_text(
        f"lambda1 = {l1!r}\nlambda2 = {l2!r}\nlambda3 = {l3!r}\n", encoding="utf-8")
    print(f"lambda1 = {l1!r}\nlambda2 = {l2!r}\nlambda3 = {l3!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    rows = harness.run_sweep(config)
    n_div = sum(r.diverged for r in rows)
    print(f"{len(rows)} runs, {n_div} diverged; summary in "
          f"{Path(config.output_dir) / 'summary.csv'}")
    return EXIT_OK


def _load_trace_groups(trace_dir: Path):
    groups: dict[tuple[str, str], list] = {}
    files = sorted(trace_dir.glob("trace_*.csv"))
    if not files:
        raise TSMTLError(f"no trace files in {trace_dir}")
    for f in files:
        stem = f.stem[len("trace_"):]
        head, _, _rep = stem.rpartition("_rep")
        variant, _, rho = head.rpartition("_rho")
        trace = harness.read_trace_csv(f)
        if trace:
            groups.setdefault((rho, variant), []).append(trace)
    return groups


def cmd_plot(args) -> int:
    results = Path(args.results)
    out = Path(args.out or results / "plots")
    out.mkdir(parents=True, exist_ok=True)
    groups = _load_trace_groups(results / "traces")
    rhos = sorted({rho for rho, _ in groups}, key=float)
    written = 0
    for rho in rhos:
        for metric in ("r_total", "val_nmse", "objective"):
            series = {}
            for (r, variant), traces in sorted(groups.items()):
                if r != rho:
                    continue
                if metric == "val_nmse" and traces[0][0].val_nmse is None:
                    continue
                iters, mean = harness.mean_traces(traces, metric)
                series[variant] = (iters, mean)
            if not series:
                continue
            plotting.line_chart(series, out / f"{metric}_rho{rho}.svg",
                                title=f"{harness._METRIC_LABELS[metric]}, rho={rho}",
                                ylabel=harness._METRIC_LABELS[metric],
                                log_y=metric == "r_total")
            written += 1
    print(f"wrote {written} plots to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    results = Path(args.results)
    rows = harness.read_summary_csv(results / "summary.csv")
    if not rows:
        raise TSMTLError("summary.csv has no rows")
    r_agg = harness.aggregate(rows, "r_total_mean")
    n_agg = harness.aggregate(rows, "val_nmse_mean")
    div = {}
    for r in rows:
        div[(r.variant, r.rho)] = div.get((r.variant, r.rho), 0) + r.diverged

    def cell(pair):
        m, s = pair
        return "n/a" if m is None else f"{m:.3e} +/- {s:.1e}"

    lines = ["| variant | rho | primal residual (last 100) | validation nMSE (last 100) | diverged |",
             "|---|---|---|---|---|"]
    for key in r_agg:
        lines.append(f"| {key[0]} | {key[1]:g} | {cell(r_agg[key])} | {cell(n_agg[key])} "
                     f"| {div[key]} |")
    table = "\n".join(lines) + "\n"
    (results / "report.md").write_text(table, encoding="utf-8")
    print(table, end="")
    harness.plot_svg(rows, results / "bars_r_total.svg", metric="r_total")
    if any(r.val_nmse_mean is not None for r in rows):
        harness.plot_svg(rows, results / "bars_val_nmse.svg", metric="val_nmse")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsmtl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic dataset file")
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--T", type=int, default=4)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--row-sparsity", type=float, default=0.4)
    p.add_argument("--jump-sparsity", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("gridsearch", help="choose lambdas by validation nMSE")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("sweep", help="run both solvers over the rho grid")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG curves from a sweep's trace files")
    p.add_argument("results", help="sweep output directory")
    p.add_argument("--out", help="plot directory (default: <results>/plots)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("report", help="summary table and bar charts from summary.csv")
    p.add_argument("results", help="sweep output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tsmtl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TSMTLError, OSError, ValueError) as exc:
        print(f"tsmtl: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
