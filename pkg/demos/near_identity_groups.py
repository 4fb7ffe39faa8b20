"""
Near-identity loops in a matrix Lie group
=========================================

For ``g = exp(y)`` with ``y`` small in a loop algebra, the factors come from
the fixed point of ``x = y - R(x)``.  Here ``R`` is the part of the
Baker-Campbell-Hausdorff product of ``P+ x`` and ``P- x`` beyond the linear
term.  Its Lipschitz constant is small, so the iteration contracts quickly.
"""

import numpy as np

from birkhoff import (
    LieAlgebraRep,
    LoopAlgebraElement,
    bch_multiply,
    exp_loop,
    group_factorize_local,
    pointwise_expm,
    split_solve,
)

sl2 = LieAlgebraRep.sl2()
rng = np.random.default_rng(5)


def small_element(norm):
    c = rng.normal(size=(5, sl2.dim)) + 1j * rng.normal(size=(5, sl2.dim))
    e = LoopAlgebraElement.from_coordinates(sl2, c, -2)
    return e * (norm / e.norm())


# %%
# The BCH product of two small loops satisfies ``exp(x) exp(y) = exp(x * y)``
# at every point of the circle.
x, y = small_element(0.05), small_element(0.05)
z = bch_multiply(x, y, order=6)
gap = pointwise_expm(x.series) @ pointwise_expm(y.series) - pointwise_expm(z.series)
print("max pointwise BCH error:", np.abs(gap).max())

# %%
# Solve the split equation for an element inside the default r/4 ball.
y = small_element(0.03)
res = split_solve(y)
print("iterations:", res.iterations, " contraction:", res.contraction, " residual:", res.residual)

# %%
# The group-level wrapper takes ``g`` itself, recovers ``y`` by a pointwise
# logarithm and returns ``g = g_plus g_minus``.
g = exp_loop(y.series)
local = group_factorize_local(g, sl2)
print("group factorization residual:", local.residual)
