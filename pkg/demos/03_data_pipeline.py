"""Datasets: synthetic generation, the portable text format, splitting and
scaling, and the UCI Air Quality loader.

Pass the path of ``AirQualityUCI.csv`` as the first argument to load the
real file; without it a small file in the same layout is written and used.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from tsmtl.data import (
    SyntheticSpec,
    apply_scaler,
    fit_scaler,
    generate_synthetic,
    load_air_quality,
    load_dataset,
    save_dataset,
    split,
)

tmp = Path(tempfile.mkdtemp())

# %% Synthetic data with known parameters
spec = SyntheticSpec(p=6, T=8, n_per_task=25, noise_std=0.1,
                     row_sparsity=0.5, jump_sparsity=0.1, seed=3)
data, theta = generate_synthetic(spec)
print("zero rows:", spec.n_zero_rows, " jumps:", spec.n_jumps())
print(np.round(theta, 2))

# %% Portable text format (lossless)
f = tmp / "synthetic.txt"
save_dataset(f, data, seed=spec.seed, theta_true=theta)
print(f.read_text().splitlines()[:7])
back, meta = load_dataset(f)
print("round trip exact:", all(np.array_equal(a[0], b[0]) for a, b in zip(data.tasks, back.tasks)))

# %% Split and z-score
train, val, test = split(data, train_frac=0.7, val_frac_of_train=0.2, seed=0)
print("rows per task (train/val/test):", train.counts[0], val.counts[0], test.counts[0])
scaler = fit_scaler(train)
Xtr = np.vstack([X for X, _ in apply_scaler(train, scaler).tasks])
Xte = np.vstack([X for X, _ in apply_scaler(test, scaler).tasks])
print("train feature means:", np.round(Xtr.mean(axis=0), 12))
print("test feature means (train statistics):", np.round(Xte.mean(axis=0), 3))

# %% Air Quality
if len(sys.argv) > 1:
    aq_path = Path(sys.argv[1])
else:
    header = ("Date;Time;CO(GT);PT08.S1(CO);NMHC(GT);C6H6(GT);PT08.S2(NMHC);NOx(GT);"
              "PT08.S3(NOx);NO2(GT);PT08.S4(NO2);PT08.S5(O3);T;RH;AH;;")
    rng = np.random.default_rng(0)
    lines = [header]
    for day in range(5):
        for hour in range(24):
            co = "-200" if (day, hour) == (1, 7) else f"{rng.uniform(0.5, 4):.1f}".replace(".", ",")
            s = rng.integers(700, 2000, 5)
            lines.append(f"{10 + day}/03/2004;{hour:02d}.00.00;{co};{s[0]};150;11,9;{s[1]};166;"
                         f"{s[2]};113;{s[3]};{s[4]};13,6;48,9;0,7578;;")
    lines += [";" * 16] * 3
    aq_path = tmp / "air_quality_sample.csv"
    aq_path.write_text("\n".join(lines) + "\n")

aq, report = load_air_quality(aq_path, return_report=True)
print(f"{aq.T} hourly tasks, p={aq.p}; kept {report.rows_kept} of {report.rows_read} rows, "
      f"{report.dropped_missing} dropped for missing values")
