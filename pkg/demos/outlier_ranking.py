"""Rank-based outlier detection on a thyroid-like synthetic table.

Each method scores a held-out set that is half outliers; the lowest-scoring
half is flagged and precision is reported over 10 random splits.
"""

from christoffel_support.harness.datasets import thyroid_surrogate
from christoffel_support.harness.experiments import run_outlier_bench

data = thyroid_surrogate(seed=0)
methods = ["christoffel:d=2", "christoffel:d=4", "christoffel:d=6",
           "kde-gaussian:h=0.2", "kde-laplace:h=0.2", "random"]
rep = run_outlier_bench(data, methods, splits=10, seed=0)
for row in rep.rows:
    print(f"{row['method']:20s} median {row['median']:.3f}  [q10 {row['q10']:.3f}, q90 {row['q90']:.3f}]")
