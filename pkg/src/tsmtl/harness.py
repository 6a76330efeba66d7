"""Experiment harness: lambda grid search, rho sweeps over repeated seeded
splits, trace/summary CSV files and SVG reports."""

from __future__ import annotations

import csv
import dataclasses
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import plotting
from .data import (
    SyntheticSpec,
    apply_scaler,
    fit_scaler,
    generate_synthetic,
    load_air_quality,
    load_dataset,
    split,
)
from .errors import AllRunsDivergedError, InvalidParameterError, SchemaError
from .kernel import build_weights
from .problem import VARIANTS, Hyperparams, ProblemData
from .solvers import TraceRecord, run

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "SummaryRow",
    "GridSearchResult",
    "load_config",
    "parse_config_text",
    "load_source",
    "prepare_split",
    "grid_search",
    "run_sweep",
    "summarize_trace",
    "emit_trace_csv",
    "read_trace_csv",
    "emit_summary_csv",
    "read_summary_csv",
    "plot_svg",
    "TRACE_COLUMNS",
    "SUMMARY_COLUMNS",
]

TRACE_COLUMNS = ("iter", "objective", "r_eq", "r_smooth", "r_pi", "r_total",
                 "val_nmse", "elapsed_seconds")
SUMMARY_COLUMNS = ("variant", "rho", "repeat", "r_total_mean", "r_total_std",
                   "val_nmse_mean", "val_nmse_std", "final_objective", "diverged")
LAST_WINDOW = 100


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a grid search or a sweep.

    ``source`` is ``"synthetic"`` (generated from the ``synth_*`` fields),
    ``"air_quality"`` (UCI CSV at ``path``) or ``"file"`` (portable dataset
    at ``path``). Lambdas left as ``None`` are chosen by :func:`grid_search`
    before a sweep.
    """

    source: str = "synthetic"
    path: str | None = None
    synth_p: int = 5
    synth_T: int = 4
    synth_n: int = 20
    synth_noise_std: float = 0.1
    synth_row_sparsity: float = 0.4
    synth_jump_sparsity: float = 0.1
    synth_seed: int = 7
    rho_grid: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0, 10.0, 20.0, 30.0)
    repeats: int = 10
    max_iters: int = 1000
    lambda_min: float = 0.1
    lambda_max: float = 1000.0
    lambda_points: int = 5
    lambda1: float | None = None
    lambda2: float | None = None
    lambda3: float | None = None
    sigma: float = 1.0
    rho1: float | str = "auto"
    variants: tuple[str, ...] = VARIANTS
    seed: int = 0
    output_dir: str = "results"
    eval_every: int = 1
    dual_coupling: str = "paper"
    nmse_denominator: str = "std"
    train_frac: float = 0.7
    val_frac: float = 0.2
    use_validation: bool = True
    timing: bool = True
    serial: bool = False
    workers: int = 4

    def __post_init__(self):
        if self.source not in ("synthetic", "air_quality", "file"):
            raise InvalidParameterError(f"unknown source {self.source!r}")
        if self.source != "synthetic" and not self.path:
            raise InvalidParameterError(f"source {self.source!r} needs a path")
        if not self.rho_grid:
            raise InvalidParameterError("rho_grid is empty")
        if any(not r > 0 for r in self.rho_grid):
            raise InvalidParameterError(f"rho values must be > 0: {self.rho_grid}")
        if self.repeats < 1:
            raise InvalidParameterError(f"repeats must be >= 1, got {self.repeats}")
        if self.lambda_points < 1 or not 0 < self.lambda_min <= self.lambda_max:
            raise InvalidParameterError("bad lambda grid bounds")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise InvalidParameterError(f"variants must be drawn from {VARIANTS}")
        if self.workers < 1:
            raise InvalidParameterError("workers must be >= 1")
        # fail early on bad solver settings
        self.hyper(1.0, 0.0, 0.0, 0.0)

    def lambda_grid(self) -> np.ndarray:
        return np.logspace(math.log10(self.lambda_min), math.log10(self.lambda_max),
                           self.lambda_points)

    def lambdas(self) -> tuple[float, float, float] | None:
        lam = (self.lambda1, self.lambda2, self.lambda3)
        return None if any(v is None for v in lam) else lam

    def hyper(self, rho: float, l1: float, l2: float, l3: float, **kw) -> Hyperparams:
        opts = dict(lambda1=l1, lambda2=l2, lambda3=l3, sigma=self.sigma, rho=rho,
                    rho1=self.rho1, dual_coupling=self.dual_coupling,
                    max_iters=self.max_iters, eval_every=self.eval_every)
        opts.update(kw)
        return Hyperparams(**opts)

    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.repeats)]


def _convert(field_type: str, text: str):
    text = text.strip()
    if "None" in field_type and text.lower() in ("", "none"):
        return None
    if "tuple[float" in field_type:
        return tuple(float(v) for v in text.replace(",", " ").split())
    if "tuple[str" in field_type:
        return tuple(v for v in text.replace(",", " ").split())
    if field_type.startswith("bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if field_type.startswith("int"):
        return int(text)
    if field_type.startswith("float | str"):
        return text if text == "auto" else float(text)
    if field_type.startswith("float"):
        return float(text)
    return text


CONFIG_FIELDS = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise SchemaError(f"config line {lineno}: expected 'key = value'")
        if key not in CONFIG_FIELDS:
            raise SchemaError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(CONFIG_FIELDS[key], value)
        except ValueError as exc:
            raise SchemaError(f"config line {lineno}: {exc}") from None
    return out


def load_config(config_file=None, /, **overrides) -> ExperimentConfig:
    """Read a config file (optional) and apply keyword overrides on top."""
    values = (parse_config_text(Path(config_file).read_text(encoding="utf-8"))
              if config_file else {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_source(config: ExperimentConfig) -> ProblemData:
    if config.source == "synthetic":
        spec = SyntheticSpec(p=config.synth_p, T=config.synth_T, n_per_task=config.synth_n,
                             noise_std=config.synth_noise_std,
                             row_sparsity=config.synth_row_sparsity,
                             jump_sparsity=config.synth_jump_sparsity, seed=config.synth_seed)
        return generate_synthetic(spec)[0]
    if config.source == "air_quality":
        return load_air_quality(config.path)
    return load_dataset(config.path)[0]


def prepare_split(data: ProblemData, config: ExperimentConfig, seed: int):
    """Split with ``seed`` and z-score features with training statistics."""
    train, val, test = split(data, config.train_frac, config.val_frac, seed)
    scaler = fit_scaler(train)
    return apply_scaler(train, scaler), apply_scaler(val, scaler), apply_scaler(test, scaler)


@dataclass
class GridSearchResult:
    best: tuple[float, float, float]
    table: list[tuple[float, float, float, float | None, bool]]


def grid_search(config: ExperimentConfig, data: ProblemData | None = None,
                table_path=None) -> GridSearchResult:
    """Pick ``(lambda1, lambda2, lambda3)`` by validation nMSE.

    Every combination of the log-spaced lambda grid is fitted with the
    multi-block solver at ``rho = 1`` on the split drawn with the base seed.
    Ties go to the lexicographically larger triple.
    """
    if data is None:
        data = load_source(config)
    train, val, _ = prepare_split(data, config, config.seed)
    W = build_weights(data.T, config.sigma)
    grid = config.lambda_grid()
    table = []
    best_key, best = None, None
    for lam in itertools.product(grid, repeat=3):
        lam = tuple(float(v) for v in lam)
        hyper = config.hyper(1.0, *lam, eval_every=config.max_iters)
        res = run(train, hyper, W, "multi_block", validation=val,
                  nmse_denominator=config.nmse_denominator, timing=False)
        score = None if res.diverged or not res.trace else res.trace[-1].val_nmse
        table.append((*lam, score, res.diverged))
        if score is None:
            continue
        key = (score, tuple(-v for v in lam))
        if best_key is None or key < best_key:
            best_key, best = key, lam
    if table_path is not None:
        with open(table_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("lambda1", "lambda2", "lambda3", "val_nmse", "diverged"))
            for l1, l2, l3, score, div in table:
                w.writerow((repr(l1), repr(l2), repr(l3), _num(score), _bool(div)))
    if best is None:
        raise AllRunsDivergedError("every grid point diverged")
    log.info("grid search chose lambdas %s", best)
    return GridSearchResult(best, table)


@dataclass
class SummaryRow:
    variant: str
    rho: float
    repeat: int
    r_total_mean: float | None
    r_total_std: float | None
    val_nmse_mean: float | None
    val_nmse_std: float | None
    final_objective: float | None
    diverged: bool


def _mean_std(x: np.ndarray) -> tuple[float, float]:
    # rescale first so traces from runs near overflow stay finite
    scale = float(np.max(np.abs(x)))
    if scale == 0.0 or not np.isfinite(scale):
        return float(x.mean()), float(x.std())
    y = x / scale
    return float(y.mean() * scale), float(y.std() * scale)


def summarize_trace(trace: Sequence[TraceRecord], variant: str, rho: float,
                    repeat: int, diverged: bool) -> SummaryRow:
    """Mean and population std over the last ``min(100, len(trace))`` records."""
    window = list(trace)[-LAST_WINDOW:]
    if not window:
        return SummaryRow(variant, rho, repeat, None, None, None, None, None, diverged)
    r_mean, r_std = _mean_std(np.array([rec.r_total for rec in window]))
    vals = [rec.val_nmse for rec in window if rec.val_nmse is not None]
    v_mean, v_std = _mean_std(np.array(vals)) if vals else (None, None)
    return SummaryRow(variant, rho, repeat, r_mean, r_std, v_mean, v_std,
                      float(window[-1].objective), diverged)


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def _bool(v: bool) -> str:
    return "true" if v else "false"


def _opt_float(text: str):
    return None if text == "" else float(text)


def emit_trace_csv(trace: Sequence[TraceRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for rec in trace:
            w.writerow((rec.iter, _num(rec.objective), _num(rec.r_eq), _num(rec.r_smooth),
                        _num(rec.r_pi), _num(rec.r_total), _num(rec.val_nmse),
                        _num(rec.elapsed_seconds)))


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise SchemaError(f"{path}: unexpected trace columns {reader.fieldnames}")
        return [TraceRecord(int(row["iter"]), float(row["objective"]), float(row["r_eq"]),
                            float(row["r_smooth"]), float(row["r_pi"]), float(row["r_total"]),
                            _opt_float(row["val_nmse"]), _opt_float(row["elapsed_seconds"]))
                for row in reader]


def emit_summary_csv(rows: Sequence[SummaryRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow((r.variant, repr(float(r.rho)), r.repeat, _num(r.r_total_mean),
                        _num(r.r_total_std), _num(r.val_nmse_mean), _num(r.val_nmse_std),
                        _num(r.final_objective), _bool(r.diverged)))


def read_summary_csv(path) -> list[SummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise SchemaError(f"{path}: unexpected summary columns {reader.fieldnames}")
        return [SummaryRow(row["variant"], float(row["rho"]), int(row["repeat"]),
                           _opt_float(row["r_total_mean"]), _opt_float(row["r_total_std"]),
                           _opt_float(row["val_nmse_mean"]), _opt_float(row["val_nmse_std"]),
                           _opt_float(row["final_objective"]), row["diverged"] == "true")
                for row in reader]


def trace_filename(variant: str, rho: float, repeat: int) -> str:
    return f"trace_{variant}_rho{rho:g}_rep{repeat}.csv"


def _sweep_job(args):
    train, val, hyper, variant, denom, timing = args
    res = run(train, hyper, None, variant, validation=val,
              nmse_denominator=denom, timing=timing)
    return res.trace, res.diverged


def run_sweep(config: ExperimentConfig, data: ProblemData | None = None,
              lambdas: tuple[float, float, float] | None = None) -> list[SummaryRow]:
    """Run every (variant, rho, repeat) combination and write its outputs.

    Writes ``<output_dir>/traces/trace_<variant>_rho<rho>_rep<r>.csv`` per run
    and ``<output_dir>/summary.csv``. Rows follow the configured order of
    variants, then rho values, then repeats.
    """
    if data is None:
        data = load_source(config)
    lambdas = lambdas or config.lambdas()
    if lambdas is None:
        lambdas = grid_search(config, data).best
    out = Path(config.output_dir)
    trace_dir = out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)

    splits = {}
    for rep, seed in enumerate(config.seeds()):
        train, val, _ = prepare_split(data, config, seed)
        splits[rep] = (train, val if config.use_validation else None)

    jobs, keys = [], []
    for variant in config.variants:
        for rho in config.rho_grid:
            for rep in range(config.repeats):
                train, val = splits[rep]
                jobs.append((train, val, config.hyper(rho, *lambdas), variant,
                             config.nmse_denominator, config.timing))
                keys.append((variant, rho, rep))

    if config.serial or config.workers == 1:
        results = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_sweep_job, jobs))

    rows = []
    for (variant, rho, rep), (trace, diverged) in zip(keys, results):
        if diverged:
            log.warning("%s diverged at rho=%g, repeat %d", variant, rho, rep)
        emit_trace_csv(trace, trace_dir / trace_filename(variant, rho, rep))
        rows.append(summarize_trace(trace, variant, rho, rep, diverged))
    emit_summary_csv(rows, out / "summary.csv")
    return rows


def aggregate(rows: Iterable[SummaryRow], metric: str = "r_total_mean"):
    """Mean and std across repeats of a per-run metric, keyed by (variant, rho)."""
    groups: dict[tuple[str, float], list[float]] = {}
    for r in rows:
        v = getattr(r, metric)
        groups.setdefault((r.variant, r.rho), [])
        if v is not None:
            groups[(r.variant, r.rho)].append(v)
    return {k: ((float(np.mean(v)), float(np.std(v))) if v else (None, None))
            for k, v in groups.items()}


_METRIC_LABELS = {"r_total": "primal residual", "val_nmse": "validation nMSE",
                  "objective": "objective"}


def plot_svg(obj, path, *, metric: str = "r_total", title: str | None = None,
             log_y: bool | None = None) -> None:
    """Render traces or summary rows as an SVG chart.

    ``obj`` is either a mapping ``label -> list[TraceRecord]`` (one line per
    label, plotted against iteration) or a sequence of :class:`SummaryRow`
    (bars per rho and variant with deviation bars across repeats; ``metric``
    then names the last-100 statistic, e.g. ``"r_total"`` or ``"val_nmse"``).
    """
    if log_y is None:
        log_y = metric == "r_total"
    label = _METRIC_LABELS.get(metric, metric)
    if isinstance(obj, Mapping):
        if not obj:
            raise InvalidParameterError("no traces to plot")
        series = {}
        for name, trace in obj.items():
            pts = [(r.iter, getattr(r, metric)) for r in trace if getattr(r, metric) is not None]
            series[name] = ([a for a, _ in pts], [b for _, b in pts])
        plotting.line_chart(series, path, title=title or label, ylabel=label, log_y=log_y)
        return
    rows = list(obj)
    if not rows:
        raise InvalidParameterError("no summary rows to plot")
    agg = aggregate(rows, f"{metric}_mean")
    rhos = list(dict.fromkeys(r.rho for r in rows))
    variants = list(dict.fromkeys(r.variant for r in rows))
    series = {v: ([agg.get((v, rho), (None, None))[0] for rho in rhos],
                  [agg.get((v, rho), (None, None))[1] for rho in rhos]) for v in variants}
    plotting.bar_chart([f"{rho:g}" for rho in rhos], series, path,
                       title=title or f"{label}, mean of last {LAST_WINDOW} iterations",
                       xlabel="rho", ylabel=label, log_y=log_y)


def mean_traces(traces: Sequence[Sequence[TraceRecord]], metric: str):
    """Average a metric over several traces, truncated to the shortest."""
    n = min(len(t) for t in traces)
    iters = [rec.iter for rec in traces[0][:n]]
    vals = np.array([[getattr(rec, metric) for rec in t[:n]] for t in traces], dtype=float)
    return iters, vals.mean(axis=0)


def config_to_text(config: ExperimentConfig) -> str:
    lines = []
    for f in fields(config):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        lines.append(f"{f.name} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


def replace_config(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(config, **changes)
