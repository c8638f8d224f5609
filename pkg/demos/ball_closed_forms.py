"""Closed forms on the Jacobi-weighted unit ball and the bounds that sandwich them.

The Christoffel function of nu_r is computed from exact rational moments;
on the unit sphere its reciprocal has a binomial closed form.
"""

import numpy as np

from christoffel_support.oracles import (
    christoffel_analytic,
    gegenbauer_boundary_kernel,
    inside_lower_bound,
    outside_upper_bound,
    sup_kernel_bound,
)
from christoffel_support.thresholding import c_r_constant

p, r = 2, 1
C = c_r_constant(p, r)
print(" d   kappa(sphere)   1/Lambda(sphere)   sup bound      lower(0) <= Lambda(0)   Lambda(2,0) <= upper")
for d in range(2, 9):
    closed = gegenbauer_boundary_kernel(p, d, r)
    direct = 1 / christoffel_analytic(p, d, r, [1.0, 0.0])
    lam0 = christoffel_analytic(p, d, r, [0.0, 0.0])
    lam_out = christoffel_analytic(p, d, r, [2.0, 0.0])
    print(f"{d:2d}  {closed:14.6f}  {direct:17.6f}  {sup_kernel_bound(d, p, r, C, 1.0):11.1f}"
          f"   {inside_lower_bound(1.0, p, r, C, d):.2e} <= {lam0:.2e}"
          f"   {lam_out:.2e} <= {outside_upper_bound(1.0, 2.0, d):.2e}")

# rotational symmetry: Lambda depends on |x| only
x = np.array([[0.3, 0.4], [0.5, 0.0], [0.0, -0.5]])
print("Lambda at three points of norm 0.5:", christoffel_analytic(p, 4, r, x))
