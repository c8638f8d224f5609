"""Monte-Carlo check of the uniform relative-error bound on the unit disk.

For each n, 100 replicates: the sup over a grid of |Lambda_n - Lambda| / Lambda,
the operator-norm majorant ||M_n - I||, and the high-probability bound.
"""

from christoffel_support.harness.experiments import run_concentration_study

rep = run_concentration_study(p=2, r=0, d=3, n_grid=[1000, 10_000, 100_000], reps=100, alpha=0.1)
print(f"{'n':>8s} {'median err':>11s} {'q90 err':>9s} {'bound':>8s} {'coverage':>9s}")
for row in rep.rows:
    print(f"{row['n']:8d} {row['median_rel_error']:11.4f} {row['q90_rel_error']:9.4f} "
          f"{row['bound']:8.3f} {row['coverage']:9.2f}")
print("log-log slope of the median error:", round(rep.slopes["median_rel_error"], 3))
print("majorant violations:", rep.summary["majorant_violations"])
