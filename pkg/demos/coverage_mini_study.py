"""
A small coverage study
======================

The full study behind the coverage tables runs 100 replications of
10000 iterations each. This version runs a handful of short replications
across the sparsity range to show the shape of the results: the score-only
baseline is fine on transitive data and falls apart once cycles appear.
"""

# %%
from bibt import Hyperparams, SimConfig, run_sweep
from bibt.simulation import sweep_rows

cfg = SimConfig(n_entities=6, trials=100, replications=4, master_seed=11,
                mcmc=Hyperparams(n_iterations=1500, burn_in=500))
reports = run_sweep(cfg, sparsities=(0.0, 0.5, 1.0))

# %%
print(f"{'sparsity':>8s} {'model':>9s} {'MSE(M)':>8s} {'CP90(M)':>8s} {'CP95(M)':>8s}")
for sparsity, report in reports.items():
    for model in ("bibt", "baseline"):
        avg = report.averages(model)
        print(f"{sparsity:8.2f} {model:>9s} {avg['mse_M']:8.3f} {avg['cp90_M']:8.3f} "
              f"{avg['cp95_M']:8.3f}")

# %%
# The same numbers in long format, ready for a plotting tool.
rows = [r for r in sweep_rows(reports) if r[2] in ("mse_curl", "recall_90")]
for row in rows[:8]:
    print(row)
