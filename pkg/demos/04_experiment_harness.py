"""The experiment harness: lambda grid search, rho sweep, CSV traces and SVG
charts. The same steps are available from the command line as
``tsmtl gridsearch``, ``tsmtl sweep``, ``tsmtl plot`` and ``tsmtl report``.
"""
import tempfile
from pathlib import Path

from tsmtl.harness import (
    ExperimentConfig,
    aggregate,
    grid_search,
    plot_svg,
    read_trace_csv,
    run_sweep,
    trace_filename,
)

out = Path(tempfile.mkdtemp())

# %% Configuration
# A short version of the full protocol: three rho values, three repeats.
config = ExperimentConfig(rho_grid=(0.01, 0.1, 1.0), repeats=3, max_iters=300,
                          lambda_points=3, output_dir=str(out), serial=True)
print(config)

# %% Choose lambdas on the validation split (multi-block, rho = 1)
gs = grid_search(config)
print("chosen lambdas:", gs.best)
scored = sorted((row for row in gs.table if row[3] is not None), key=lambda r: r[3])
for l1, l2, l3, score, _ in scored[:3]:
    print(f"  ({l1:g}, {l2:g}, {l3:g}) -> nMSE {score:.4f}")

# %% Sweep
rows = run_sweep(config, lambdas=gs.best)
print((out / "summary.csv").read_text())
for (variant, rho), (mean, std) in aggregate(rows, "r_total_mean").items():
    print(f"{variant:12s} rho={rho:<5g} residual {mean:.2e} +/- {std:.1e}")

# %% Charts
traces = {v: read_trace_csv(out / "traces" / trace_filename(v, 0.1, 0))
          for v in config.variants}
plot_svg(traces, out / "residual_rho0.1.svg", metric="r_total")
plot_svg(traces, out / "nmse_rho0.1.svg", metric="val_nmse")
plot_svg(rows, out / "bars_residual.svg", metric="r_total")
print("charts in", out)
