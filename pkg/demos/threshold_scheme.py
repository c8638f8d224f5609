"""The theoretical degree and threshold schedule versus the practical rule.

For the uniform law on [-1, 1] the schedule only becomes applicable at an
astronomically large n; below that the practical rule floor(2 n^{1/4}) with
the minimum-score threshold is what one actually runs.
"""

from christoffel_support.thresholding import SchemeParams, practical_degree, select_scheme

params = SchemeParams(p=1, r=0, C=0.5, R=1.0, eps=0.5, alpha=0.1, diam=2.0)
print(f"{'n':>10s} {'d_n':>5s} {'gamma_n':>11s} {'delta_n':>10s} {'practical d':>12s}")
for k in range(3, 13, 1):
    n = 10**k
    out = select_scheme(n, params)
    gamma = "-" if out.gamma_n is None else f"{out.gamma_n:.3e}"
    delta = "-" if out.delta_n is None else f"{out.delta_n:.3g}"
    print(f"{n:10.0e} {out.d_n:5d} {gamma:>11s} {delta:>10s} {practical_degree(n):12d}")
out = select_scheme(1000, params)
print(f"C_pra = {out.C_pra:.4g}, D = {out.D:.4g}, n0 = {out.n0:.3g}, n1 = {out.n1:.3g}")
