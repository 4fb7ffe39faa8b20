"""
Partial indices of a matrix loop
================================

An invertible matrix loop factors as ``A_plus D A_minus`` with
``D = diag(z**k1, ..., z**kn)``.  The tuple ``k1 >= ... >= kn`` is unique
and sums to the winding number of the determinant.
"""

import numpy as np

from birkhoff import MatrixLoop, det_loop, full_factorize, partial_indices, verify_factorization, winding_number

# %%
# Plant a factorization.  ``A_plus`` is unit upper triangular in powers of z
# and ``A_minus`` is unit lower triangular in powers of 1/z, so their product
# with ``D`` hides the indices (2, 0, -1).
rng = np.random.default_rng(3)
plus = np.zeros((2, 3, 3), dtype=complex)
plus[0] = np.eye(3)
plus[:, 0, 1:] = 0.5 * rng.normal(size=(2, 2))
plus[:, 1, 2] = 0.5 * rng.normal(size=2)
minus = np.zeros((2, 3, 3), dtype=complex)
minus[-1] = np.eye(3)
minus[:, 1:, 0] = 0.5 * rng.normal(size=(2, 2))
minus[:, 2, 1] = 0.5 * rng.normal(size=2)
g = MatrixLoop(plus, 0) @ MatrixLoop.monomial_diag((2, 0, -1)) @ MatrixLoop(minus, -1)
print("winding of det g:", winding_number(det_loop(g)))

# %%
# Recover the indices.  Candidates with the right sum are tried in turn and the
# first consistent finite-section solve wins; the search order does not
# change the answer.
print("balanced order:   ", partial_indices(g))
print("spread-desc order:", partial_indices(g, order="spread-desc"))

# %%
# The full factorization comes with its own residual, and an independent check
# resamples it on the circle.
fact = full_factorize(g)
report = verify_factorization(g, fact)
print("indices:", fact.indices, " residual:", fact.residual)
print("verification passed:", report.passed, report.checks)
