"""Datasets: seeded synthetic generator, UCI Air Quality loader, scaling, splits,
and a plain-text portable dataset format."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateFeatureError,
    EmptyTaskError,
    InvalidDimensionError,
    InvalidParameterError,
    ParseError,
    SchemaError,
    SplitError,
)
from .problem import ProblemData

__all__ = [
    "SyntheticSpec",
    "generate_synthetic",
    "SYNTH_A",
    "AIR_QUALITY_FEATURES",
    "AIR_QUALITY_TARGET",
    "LoadReport",
    "load_air_quality",
    "ScalerParams",
    "fit_scaler",
    "apply_scaler",
    "invert_scaler",
    "split",
    "split_sizes",
    "save_dataset",
    "load_dataset",
]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SyntheticSpec:
    p: int
    T: int
    n_per_task: int | tuple[int, ...] = 20
    noise_std: float = 0.1
    row_sparsity: float = 0.4
    jump_sparsity: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.T < 1:
            raise InvalidDimensionError(f"p and T must be >= 1, got p={self.p}, T={self.T}")
        counts = self.counts
        if len(counts) != self.T or min(counts) < 1:
            raise InvalidDimensionError(f"bad per-task sample counts {counts}")
        if not self.noise_std >= 0:
            raise InvalidParameterError(f"noise_std must be >= 0, got {self.noise_std}")
        for name in ("row_sparsity", "jump_sparsity"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {v}")

    @property
    def counts(self) -> tuple[int, ...]:
        if isinstance(self.n_per_task, (int, np.integer)):
            return (int(self.n_per_task),) * self.T
        return tuple(int(n) for n in self.n_per_task)

    @property
    def n_zero_rows(self) -> int:
        return _round_half_up(self.row_sparsity * self.p)

    def n_jumps(self) -> int:
        active = self.p - self.n_zero_rows
        return min(_round_half_up(self.jump_sparsity * active * self.T),
                   active * max(self.T - 1, 0))


#: Benchmark instance used by the acceptance suite.
SYNTH_A = SyntheticSpec(p=5, T=4, n_per_task=20, noise_std=0.1,
                        row_sparsity=0.4, jump_sparsity=0.1, seed=7)


def generate_synthetic(spec: SyntheticSpec):
    """Draw a TS-MTL regression problem with a known parameter matrix.

    Active feature rows follow ``a_j + b_j sin(2 pi t / T + phi_j)`` with a
    few step jumps (a jump at ``(j, t)`` shifts ``theta_j`` for all tasks from
    ``t`` on). Exactly ``round(row_sparsity * p)`` rows are zero and
    ``round(jump_sparsity * active * T)`` jumps are placed.

    Returns
    -------
    data : ProblemData
    theta_true : ndarray, shape (p, T)
    """
    rng = np.random.default_rng(spec.seed)
    p, T = spec.p, spec.T
    zero_rows = rng.choice(p, size=spec.n_zero_rows, replace=False)
    active = np.setdiff1d(np.arange(p), zero_rows)

    theta = np.zeros((p, T))
    t = np.arange(T)
    a = rng.normal(0.0, 1.0, size=active.size)
    b = rng.uniform(0.5, 1.0, size=active.size)
    phi = rng.uniform(0.0, 2 * np.pi, size=active.size)
    theta[active] = a[:, None] + b[:, None] * np.sin(2 * np.pi * t[None, :] / T + phi[:, None])

    n_jumps = spec.n_jumps()
    if n_jumps:
        # candidate cells (row, t) with t >= 1, flattened
        cells = rng.choice(active.size * (T - 1), size=n_jumps, replace=False)
        sizes = rng.uniform(1.0, 2.0, size=n_jumps) * rng.choice([-1.0, 1.0], size=n_jumps)
        for cell, size in zip(cells, sizes):
            j = active[cell // (T - 1)]
            t0 = 1 + cell % (T - 1)
            theta[j, t0:] += size

    tasks = []
    for t_idx, n in enumerate(spec.counts):
        X = rng.standard_normal((n, p))
        y = X @ theta[:, t_idx] + spec.noise_std * rng.standard_normal(n)
        tasks.append((X, y))
    return ProblemData(tasks), theta


AIR_QUALITY_FEATURES = ("PT08.S1(CO)", "PT08.S2(NMHC)", "PT08.S3(NOx)",
                        "PT08.S4(NO2)", "PT08.S5(O3)", "T", "RH")
AIR_QUALITY_TARGET = "CO(GT)"
_MISSING = -200.0


@dataclass
class LoadReport:
    rows_read: int = 0
    rows_kept: int = 0
    dropped_missing: int = 0
    dropped_bad_time: int = 0
    hours: list[int] = field(default_factory=list)


def _parse_number(text: str, lineno: int, column: str) -> float:
    try:
        return float(text.strip().replace(",", "."))
    except ValueError:
        raise ParseError(f"line {lineno}, column {column!r}: cannot parse {text!r}") from None


def _parse_hour(text: str) -> int | None:
    head = text.strip().replace(":", ".").split(".")[0]
    if not head.isdigit():
        return None
    hour = int(head)
    return hour if 0 <= hour < 24 else None


def load_air_quality(path, *, strict: bool = True, return_report: bool = False):
    """Load the UCI Air Quality CSV as 24 hour-of-day regression tasks.

    The file is semicolon-delimited with decimal commas and ``-200`` for
    missing values. Features are the five PT08 sensor channels, ``T`` and
    ``RH``; the target is ``CO(GT)``. Rows with a missing value in any used
    column are dropped, as are rows whose ``Time`` cannot be read.

    With ``strict=True`` all 24 hours must be present; otherwise only the
    hours that have data become tasks (in increasing hour order).
    """
    path = Path(path)
    wanted = ("Date", "Time", AIR_QUALITY_TARGET) + AIR_QUALITY_FEATURES
    report = LoadReport()
    rows_by_hour: dict[int, list[list[float]]] = {h: [] for h in range(24)}
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=";")
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        col = {name: header.index(name) for name in wanted}
        numeric = (AIR_QUALITY_TARGET,) + AIR_QUALITY_FEATURES
        for lineno, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            report.rows_read += 1
            if len(row) <= max(col.values()):
                raise ParseError(f"line {lineno}: expected at least "
                                 f"{max(col.values()) + 1} fields, got {len(row)}")
            hour = _parse_hour(row[col["Time"]])
            if hour is None:
                report.dropped_bad_time += 1
                continue
            values = [_parse_number(row[col[c]], lineno, c) for c in numeric]
            if any(v == _MISSING for v in values):
                report.dropped_missing += 1
                continue
            rows_by_hour[hour].append(values)
            report.rows_kept += 1

    hours = [h for h in range(24) if rows_by_hour[h]]
    if strict:
        empty = [h for h in range(24) if not rows_by_hour[h]]
        if empty:
            raise EmptyTaskError(f"{path}: no usable rows for hours {empty}")
    elif not hours:
        raise EmptyTaskError(f"{path}: no usable rows")
    report.hours = hours
    tasks = []
    for h in hours:
        arr = np.array(rows_by_hour[h], dtype=float)
        tasks.append((arr[:, 1:], arr[:, 0]))
    data = ProblemData(tasks)
    return (data, report) if return_report else data


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray


def fit_scaler(train: ProblemData) -> ScalerParams:
    """Per-feature mean and population std pooled over all training rows."""
    X = np.vstack([X for X, _ in train.tasks])
    if X.shape[0] == 0:
        raise InvalidDimensionError("cannot fit a scaler on empty data")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    bad = np.flatnonzero(~(std > 0))
    if bad.size:
        raise DegenerateFeatureError(f"features {bad.tolist()} are constant in the training data")
    return ScalerParams(mean, std)


def apply_scaler(data: ProblemData, params: ScalerParams) -> ProblemData:
    """z-score the features of ``data``; targets are left as they are."""
    return ProblemData([((X - params.mean) / params.std, y) for X, y in data.tasks])


def invert_scaler(data: ProblemData, params: ScalerParams) -> ProblemData:
    return ProblemData([(X * params.std + params.mean, y) for X, y in data.tasks])


def split_sizes(n: int, train_frac: float = 0.7, val_frac_of_train: float = 0.2):
    """Return ``(train, val, test)`` row counts for a task with ``n`` rows.

    ``test = floor((1 - train_frac) n)``; of the rest,
    ``floor((1 - val_frac_of_train) * rest)`` rows are kept for training and
    the remainder is validation.
    """
    eps = 1e-9
    test = int(math.floor((1.0 - train_frac) * n + eps))
    rest = n - test
    train = int(math.floor((1.0 - val_frac_of_train) * rest + eps))
    return train, rest - train, test


def split(data: ProblemData, train_frac: float = 0.7, val_frac_of_train: float = 0.2,
          seed: int = 0):
    """Random per-task split into ``(train, val, test)``.

    Rows of each task are permuted with a generator seeded by ``seed`` and
    cut according to :func:`split_sizes`.
    """
    for name, v in (("train_frac", train_frac), ("val_frac_of_train", val_frac_of_train)):
        if not 0 < v < 1:
            raise InvalidParameterError(f"{name} must lie in (0, 1), got {v}")
    rng = np.random.default_rng(seed)
    parts: tuple[list, list, list] = ([], [], [])
    for t, (X, y) in enumerate(data.tasks):
        n = X.shape[0]
        sizes = split_sizes(n, train_frac, val_frac_of_train)
        if min(sizes) < 1:
            raise SplitError(f"task {t} has {n} rows, too few to split into {sizes}")
        perm = rng.permutation(n)
        bounds = np.cumsum(sizes)[:-1]
        for part, idx in zip(parts, np.split(perm, bounds)):
            part.append((X[idx], y[idx]))
    return tuple(ProblemData(p) for p in parts)


_FORMAT_TAG = "# tsmtl dataset v1"


def save_dataset(path, data: ProblemData, *, seed: int | None = None,
                 theta_true: np.ndarray | None = None) -> None:
    """Write ``data`` as plain text, lossless at 17 significant digits.

    Layout: a tag line, ``key = value`` metadata (``p``, ``T``, ``counts``,
    ``seed``), then for each task a ``task <t> <n_t>`` line followed by
    ``n_t`` rows ``y x_1 ... x_p``. An optional ``theta_true`` block holds
    ``p`` rows of ``T`` values.
    """
    fmt = "%.17g"
    lines = [_FORMAT_TAG,
             f"p = {data.p}",
             f"T = {data.T}",
             "counts = " + " ".join(str(n) for n in data.counts),
             f"seed = {'' if seed is None else int(seed)}"]
    for t, (X, y) in enumerate(data.tasks):
        lines.append(f"task {t} {X.shape[0]}")
        for yi, xi in zip(y, X):
            lines.append(" ".join(fmt % v for v in (yi, *xi)))
    if theta_true is not None:
        lines.append("theta_true")
        for row in np.asarray(theta_true, dtype=float):
            lines.append(" ".join(fmt % v for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path):
    """Read a file written by :func:`save_dataset`.

    Returns ``(data, meta)`` where ``meta`` has ``seed`` and, when present,
    ``theta_true``.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != _FORMAT_TAG:
        raise SchemaError(f"{path}: not a tsmtl dataset file")
    meta: dict = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        key, _, value = lines[i].partition("=")
        meta[key.strip()] = value.strip()
        i += 1
    try:
        p, T = int(meta["p"]), int(meta["T"])
        counts = [int(c) for c in meta["counts"].split()]
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: bad header ({exc})") from None

    def rows(start: int, n: int, width: int) -> np.ndarray:
        try:
            arr = np.array([[float(v) for v in lines[start + r].split()] for r in range(n)])
        except (IndexError, ValueError):
            raise ParseError(f"{path}: malformed block starting at line {start + 1}") from None
        if arr.shape != (n, width):
            raise ParseError(f"{path}: block at line {start + 1} has shape {arr.shape}, "
                             f"expected {(n, width)}")
        return arr

    tasks = []
    for t in range(T):
        expected = f"task {t} {counts[t]}"
        if i >= len(lines) or lines[i].strip() != expected:
            raise ParseError(f"{path}: line {i + 1}: expected {expected!r}")
        block = rows(i + 1, counts[t], p + 1)
        tasks.append((block[:, 1:], block[:, 0]))
        i += 1 + counts[t]
    out = {"seed": int(meta["seed"]) if meta.get("seed") else None}
    if i < len(lines) and lines[i].strip() == "theta_true":
        out["theta_true"] = rows(i + 1, p, T)
    return ProblemData(tasks), out
