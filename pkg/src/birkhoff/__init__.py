"""Birkhoff factorization of banded loops on the unit circle.

Scalar and matrix loops are banded Laurent series.  The package provides
Wiener-algebra norms and projections, scalar factorizations
``g = g_plus z**kappa g_minus``, truncated BCH products with a split solver
for loops near the identity, and matrix factorizations ``g = A_plus D A_minus``
with partial indices.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BirkhoffError,
    DomainError,
    IndexObstructionError,
    InvalidArgumentError,
    InvariantViolation,
    NotInvertibleError,
    NumericError,
    ParseError,
    TruncationError,
)
from .laurent import *  # noqa: E402,F401,F403
from .norms import *  # noqa: E402,F401,F403
from .scalar import *  # noqa: E402,F401,F403
from .bch import *  # noqa: E402,F401,F403
from .matrix import *  # noqa: E402,F401,F403
from .io import *  # noqa: E402,F401,F403
