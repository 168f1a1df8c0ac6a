"""
A reduced version of the contamination study
============================================

The full study (5 sample sizes, 4 contamination levels, 4 alphas, 200
replications) is what ``mdpde experiment`` runs.  Here one cell of the
grid is summarized with a handful of replications.
"""

import numpy as np

from mdpde.experiment import PARAM_NAMES, ExperimentConfig, run_cell

cfg = ExperimentConfig(reps=20)
truth = cfg.truth()

for eps in (0.0, 0.10):
    for alpha in (0.0, 0.3):
        cell = run_cell(cfg, 500, eps, alpha)
        worst = PARAM_NAMES[int(np.argmax(np.abs(cell.mean - truth)))]
        print(f"eps={eps:.2f} alpha={alpha:.1f}: mean S11={cell.mean[6]:8.3f}, "
              f"worst-biased parameter {worst}, failures={cell.failure_count}")
