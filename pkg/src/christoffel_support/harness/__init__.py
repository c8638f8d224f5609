"""Experiment drivers, baselines and the command line interface."""

from .datasets import outlier_split, separable_benchmark, thyroid_surrogate
from .experiments import (
    ExperimentConfig,
    Method,
    RunReport,
    precision_at_half,
    run_concentration_study,
    run_convergence_study,
    run_outlier_bench,
    run_synthetic_support,
)
from .io import Dataset, ingest_csv, write_csv
from .kde import kde_score
