"""
Regret against sample size
==========================

A reduced sweep over the number of clusters M: M = 1 is the single
barycenter, M = N evaluates every policy on its own samples. The CSV it
writes has one row per (M, n, replication).
"""

import sys
from dataclasses import replace

from cklpe import ExperimentConfig, emit_csv, run_sweep
from cklpe.harness import summarize

cfg = replace(ExperimentConfig(), cluster_counts=(1, 10, 1000), sample_sizes=(1000, 5000), replications=20)
records = run_sweep(cfg, workers=2)
for row in summarize(records, cfg.master_seed, n_boot=500):
    print(f"{row['method']:5s} M={row['m']:4d} n={row['n']:5d}  regret {row['mean_regret']:.4f} "
          f"[{row['ci_low']:.4f}, {row['ci_high']:.4f}]")

out = sys.argv[1] if len(sys.argv) > 1 else "regret_sweep.csv"
emit_csv(records, out)
print("wrote", len(records), "rows to", out)
