"""
How much do the thresholds matter?
==================================

Two small sweeps.  On the linear system the thresholds come from offline
quantiles between 0.8 and 0.98; on the binary system every true threshold is
moved up or down by 0.05.  The full-size versions are the bundled
`linear_quantile_sweep` and `offset_sweep` configs; these use fewer trials so
the script finishes in well under a minute.
"""

import statistics

from trca.evaluation import ExperimentConfig, format_aggregates, threshold_sweep

linear = threshold_sweep(ExperimentConfig(generator="linear", thresholds="sweep", n_trials=10,
                                          offline_length=5000, online_lengths=(100,)))
print(format_aggregates(linear))
means = [a.mean_f1 for a in linear.aggregates()]
print(f"spread across the quantile grid: std {statistics.pstdev(means):.3f}\n")

offset = threshold_sweep(ExperimentConfig(thresholds="offset", offsets=(-0.05, 0.0, 0.05),
                                          n_trials=10, offline_length=5000, online_lengths=(50,)))
print(format_aggregates(offset))
print("with the true thresholds:", {n: round(f, 3) for n, f in offset.reference.items()})
