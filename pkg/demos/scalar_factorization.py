"""
Factoring a scalar loop
=======================

A nonvanishing loop on the unit circle splits as ``g = g_plus * z**kappa * g_minus``
with ``g_plus`` holomorphic in the disk and ``g_minus`` holomorphic outside
it, normalized by ``g_minus(inf) = 1``.  The exponent ``kappa`` is the
winding number of ``g``.
"""

import numpy as np

from birkhoff import (
    LaurentSeries,
    exp_loop,
    factor_laurent_poly,
    scalar_factorize,
    shift,
    wiener_distance,
    winding_number,
)

# %%
# Build a loop with a known winding number: ``z**3`` times the exponential of a
# small two-sided series.
h = LaurentSeries([0.1, -0.2j, 0.05, 0.3], kmin=-2)
g = shift(exp_loop(h), 3)
print("band of g:", g.kmin, "to", g.kmax, "with", len(g.coeffs), "coefficients")
print("winding number:", winding_number(g))

# %%
# Factor it.  The default route takes a logarithm of ``z**-kappa g`` and splits
# it with the Riesz projections.
fact = scalar_factorize(g)
print("kappa =", fact.kappa)
print("reconstruction error in the Wiener norm:", wiener_distance(g, fact.reconstruct()))
print("g_minus at infinity:", fact.minus.coefficient(0))

# %%
# Laurent polynomials can also be factored exactly from their roots.  Roots
# inside the disk end up in the minus factor and each contributes one unit
# of winding.
p = LaurentSeries(np.poly([0.5, 0.25j, 2.0])[::-1])
by_roots = factor_laurent_poly(p)
by_log = scalar_factorize(p, method="exp-log")
print("kappa from roots:", by_roots.kappa, " from the log route:", by_log.kappa)
print("distance between the plus factors:", wiener_distance(by_roots.plus, by_log.plus))
