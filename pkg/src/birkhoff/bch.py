"""Truncated BCH products on loop algebras and near-identity group factorization.

A loop-algebra element is a :class:`MatrixLoop` whose coefficients all lie
in the span of a matrix Lie algebra.  The BCH product ``x * y`` with
``exp(x) exp(y) = exp(x * y)`` is summed through its homogeneous components
``Z_1, ..., Z_order`` using the recursion

    (n+1) Z_{n+1} = 1/2 [x - y, Z_n]
                    + sum_{p >= 1, 2p <= n} B_{2p}/(2p)!
                      sum_{k_1+...+k_{2p} = n} [Z_{k_1}, [..., [Z_{k_{2p}}, x + y]...]]

with Bernoulli numbers ``B_{2p}``.  The split solver then finds ``x`` with
``P+(x) * P-(x) = y`` by iterating ``x <- y - R(x)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import DomainError, InvalidArgumentError, NumericError
from .laurent import MatrixLoop, samples
from .norms import exp_loop, log_loop, matrix_norm, project_ominus, project_plus, wiener_distance, wiener_norm

__all__ = [
    "DEFAULT_RADIUS",
    "DEFAULT_ORDER",
    "LieAlgebraRep",
    "LoopAlgebraElement",
    "bch_components",
    "bch_multiply",
    "bch_remainder",
    "lipschitz_estimate",
    "split_remainder",
    "SplitResult",
    "split_solve",
    "LocalFactorization",
    "group_factorize_local",
    "pointwise_expm",
]

DEFAULT_RADIUS = 1.0 / 8.0
DEFAULT_ORDER = 6
MAX_ORDER = 8


class LieAlgebraRep:
    """Matrix Lie algebra given by a basis of ``n x n`` complex matrices.

    The basis is checked for linear independence and for closure under the
    commutator; structure constants are kept in ``structure_constants[i, j]``
    (coordinates of ``[b_i, b_j]``).
    """

    def __init__(self, basis, norm: str = "spectral", closure_tol: float = 1e-10):
        b = np.array(basis, dtype=complex)
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[0] == 0:
            raise InvalidArgumentError("basis must be a non-empty list of square matrices")
        d, n = b.shape[0], b.shape[1]
        flat = b.reshape(d, n * n).T
        if np.linalg.matrix_rank(flat, tol=1e-10) < d:
            raise InvalidArgumentError("basis matrices are linearly dependent")
        matrix_norm(np.eye(n), norm)
        self.basis = b
        self.n = n
        self.dim = d
        self.norm_tag = norm
        self._flat = flat
        self._pinv = np.linalg.pinv(flat)
        brackets = np.einsum("iab,jbc->ijac", b, b) - np.einsum("jab,ibc->ijac", b, b)
        coords = self.coordinates(brackets)
        miss = np.max(np.abs(self.from_coordinates(coords) - brackets))
        if miss > closure_tol:
            raise InvalidArgumentError(f"basis is not closed under brackets (defect {miss:.2e})")
        self.structure_constants = coords

    def coordinates(self, m):
        """Least-squares coordinates of matrices (last two axes) in the basis."""
        m = np.asarray(m, dtype=complex)
        lead = m.shape[:-2]
        return (self._pinv @ m.reshape(-1, self.n * self.n).T).T.reshape(lead + (self.dim,))

    def from_coordinates(self, c):
        return np.tensordot(np.asarray(c), self.basis, axes=([-1], [0]))

    def span_defect(self, m) -> float:
        """Largest entrywise distance of the matrices ``m`` from the span."""
        m = np.asarray(m, dtype=complex)
        return float(np.max(np.abs(self.from_coordinates(self.coordinates(m)) - m), initial=0.0))

    def __repr__(self):
        return f"LieAlgebraRep(n={self.n}, dim={self.dim}, norm={self.norm_tag!r})"

    @classmethod
    def sl2(cls, **kw):
        e = [[0, 1], [0, 0]]
        f = [[0, 0], [1, 0]]
        h = [[1, 0], [0, -1]]
        return cls([e, f, h], **kw)

    @classmethod
    def gl(cls, n: int, **kw):
        basis = []
        for i in range(n):
            for j in range(n):
                m = np.zeros((n, n))
                m[i, j] = 1.0
                basis.append(m)
        return cls(basis, **kw)

    @classmethod
    def sl(cls, n: int, **kw):
        basis = []
        for i in range(n):
            for j in range(n):
                if i != j:
                    m = np.zeros((n, n))
                    m[i, j] = 1.0
                    basis.append(m)
        for i in range(n - 1):
            m = np.zeros((n, n))
            m[i, i], m[i + 1, i + 1] = 1.0, -1.0
            basis.append(m)
        return cls(basis, **kw)

    @classmethod
    def strictly_upper(cls, n: int, **kw):
        """Nilpotent algebra of strictly upper-triangular matrices."""
        basis = []
        for i in range(n):
            for j in range(i + 1, n):
                m = np.zeros((n, n))
                m[i, j] = 1.0
                basis.append(m)
        return cls(basis, **kw)

    @classmethod
    def abelian(cls, n: int = 1, **kw):
        """Scalar multiples of the identity."""
        return cls([np.eye(n)], **kw)


class LoopAlgebraElement:
    """A loop with every coefficient in ``span(rep.basis)``.

    Supports ``+``, ``-``, scalar multiplication and :meth:`bracket`.
    """

    __slots__ = ("rep", "series")

    def __init__(self, rep: LieAlgebraRep, series: MatrixLoop, tol: float = 1e-10, check: bool = True):
        if series.n != rep.n:
            raise InvalidArgumentError(f"loop dimension {series.n} does not match rep dimension {rep.n}")
        if check:
            defect = rep.span_defect(series.coeffs)
            if defect > tol:
                raise DomainError(f"loop coefficients leave the Lie algebra (defect {defect:.2e})")
        self.rep = rep
        self.series = series

    @classmethod
    def from_coordinates(cls, rep, coords, kmin=0):
        """Build from an array ``coords[k - kmin, i]`` of basis coordinates."""
        return cls(rep, MatrixLoop(rep.from_coordinates(coords), kmin), check=False)

    @classmethod
    def project(cls, rep, series: MatrixLoop, tol: float = 1e-8):
        """Orthogonal projection of ``series`` onto the loop algebra, if it is ``tol``-close."""
        defect = rep.span_defect(series.coeffs)
        if defect > tol:
            raise DomainError(f"loop coefficients leave the Lie algebra (defect {defect:.2e})")
        return cls.from_coordinates(rep, rep.coordinates(series.coeffs), series.kmin)

    @classmethod
    def zero(cls, rep):
        return cls(rep, MatrixLoop(np.zeros((1, rep.n, rep.n))), check=False)

    def _wrap(self, series):
        return LoopAlgebraElement(self.rep, series, check=False)

    def norm(self) -> float:
        return wiener_norm(self.series, self.rep.norm_tag)

    def bracket(self, other: "LoopAlgebraElement") -> "LoopAlgebraElement":
        a, b = self.series, other.series
        return self._wrap(a @ b - b @ a)

    def plus_part(self) -> "LoopAlgebraElement":
        return self._wrap(project_plus(self.series))

    def ominus_part(self) -> "LoopAlgebraElement":
        return self._wrap(project_ominus(self.series))

    def __add__(self, other):
        return self._wrap(self.series + other.series)

    def __sub__(self, other):
        return self._wrap(self.series - other.series)

    def __neg__(self):
        return self._wrap(-self.series)

    def __mul__(self, c):
        return self._wrap(self.series * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"LoopAlgebraElement(dim={self.rep.dim}, band={self.series.band})"


def _bernoulli(m: int) -> Fraction:
    b = [Fraction(1)]
    for k in range(1, m + 1):
        b.append(-sum(math.comb(k + 1, j) * b[j] for j in range(k)) / (k + 1))
    return b[m]


_K = {p: float(_bernoulli(2 * p) / math.factorial(2 * p)) for p in range(1, MAX_ORDER // 2 + 1)}


def _compositions(total: int, parts: int):
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def bch_components(x, y, order: int, bracket=None):
    """Homogeneous BCH components ``[Z_1, ..., Z_order]`` of ``log(exp x exp y)``.

    Works for any objects closed under ``+``, ``-``, scalar ``*`` and
    ``bracket`` (default: ``a.bracket(b)``).
    """
    if not 1 <= order <= MAX_ORDER:
        raise InvalidArgumentError(f"BCH order must lie in [1, {MAX_ORDER}], got {order}")
    if bracket is None:
        bracket = lambda a, b: a.bracket(b)  # noqa: E731
    s = x + y
    d = x - y
    Z = [None, s]
    for n in range(1, order):
        acc = bracket(d, Z[n]) * 0.5
        for p in range(1, n // 2 + 1):
            for ks in _compositions(n, 2 * p):
                term = s
                for k in reversed(ks):
                    term = bracket(Z[k], term)
                acc = acc + term * _K[p]
        Z.append(acc * (1.0 / (n + 1)))
    return Z[1:]


def _check_ball(x, y, radius):
    nx, ny = x.norm(), y.norm()
    if nx > radius or ny > radius:
        raise DomainError(f"BCH inputs must lie in the ball of radius {radius}: norms {nx:.4g}, {ny:.4g}")


def bch_remainder(x, y, order: int = DEFAULT_ORDER, radius: float = DEFAULT_RADIUS):
    """``(x * y) - x - y``: the BCH components of degree 2 through ``order``."""
    _check_ball(x, y, radius)
    Z = bch_components(x, y, order)
    out = LoopAlgebraElement.zero(x.rep)
    for z in Z[1:]:
        out = out + z
    return out


def bch_multiply(x, y, order: int = DEFAULT_ORDER, radius: float = DEFAULT_RADIUS):
    """Truncated BCH product ``x * y`` of two loop-algebra elements."""
    return (x + y) + bch_remainder(x, y, order, radius)


def _pair_norm(p):
    if isinstance(p, tuple):
        return max(q.norm() for q in p)
    return p.norm()


def _random_element(rep, band, rng, scale):
    k = band[1] - band[0] + 1
    c = rng.normal(size=(k, rep.dim)) + 1j * rng.normal(size=(k, rep.dim))
    e = LoopAlgebraElement.from_coordinates(rep, c, band[0])
    return e * (scale / e.norm())


def lipschitz_estimate(fn, center, radius: float, samples: int = 200, *, band=(-2, 2), seed=0) -> float:
    """Sampled lower bound for the Lipschitz constant of ``fn`` on a ball.

    ``center`` is a :class:`LoopAlgebraElement` or a tuple of them (then
    ``fn`` takes that many arguments and distances use the max norm over the
    components).  Pairs are drawn inside the ball at a spread of separations.
    """
    if samples < 100:
        raise InvalidArgumentError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    is_pair = isinstance(center, tuple)
    parts = center if is_pair else (center,)
    rep = parts[0].rep
    call = (lambda p: fn(*p)) if is_pair else (lambda p: fn(p[0]))
    best = 0.0
    for _ in range(samples):
        a = tuple(c + _random_element(rep, band, rng, radius * rng.uniform(0.0, 0.95)) for c in parts)
        sep = radius * 10.0 ** rng.uniform(-4, 0)
        b = []
        for c, ac in zip(parts, a):
            room = radius * 0.999 - (ac - c).norm()
            b.append(ac + _random_element(rep, band, rng, max(min(sep, room), 0.0) * rng.uniform(0.2, 1.0)))
        b = tuple(b)
        dist = max((p - q).norm() for p, q in zip(a, b))
        if dist == 0.0:
            continue
        fa, fb = call(a), call(b)
        best = max(best, _pair_norm(fa - fb) / dist)
    return best


def split_remainder(x, order: int = DEFAULT_ORDER, radius: float = DEFAULT_RADIUS):
    """``R(x) = bch_remainder(P+ x, P- x)``, so that ``P+x * P-x = x + R(x)``."""
    return bch_remainder(x.plus_part(), x.ominus_part(), order, radius)


@dataclass
class SplitResult:
    x: LoopAlgebraElement
    iterations: int
    contraction: float
    residual: float
    steps: list = field(default_factory=list)


def split_solve(
    y,
    order: int = DEFAULT_ORDER,
    radius: float = DEFAULT_RADIUS,
    tol: float = 1e-10,
    step_tol: float = 1e-12,
    max_iter: int = 100,
) -> SplitResult:
    """Solve ``P+(x) * P-(x) = y`` by the contraction ``x <- y - R(x)``.

    ``y`` must satisfy ``||y||_W <= radius/4``.  The reported contraction
    factor is the largest ratio of consecutive step norms (steps already at
    round-off level are ignored).
    """
    ny = y.norm()
    if ny > radius / 4:
        raise DomainError(f"||y|| = {ny:.4g} exceeds radius/4 = {radius / 4:.4g}")
    x = y
    steps = []
    for it in range(1, max_iter + 1):
        x_new = y - split_remainder(x, order, radius)
        steps.append((x_new - x).norm())
        x = x_new
        if steps[-1] < step_tol:
            break
    ratios = [b / a for a, b in zip(steps, steps[1:]) if a > 10 * step_tol]
    contraction = max(ratios, default=0.0)
    residual = wiener_distance((x + split_remainder(x, order, radius)).series, y.series, y.rep.norm_tag)
    if steps[-1] >= step_tol and residual > tol:
        raise NumericError(f"split solver did not converge in {max_iter} steps", residual=residual)
    if residual > tol:
        raise NumericError(f"split residual {residual:.3e} exceeds {tol:.1e}", residual=residual)
    return SplitResult(x, it, contraction, residual, steps)


def pointwise_expm(loop: MatrixLoop, N: int = 256) -> np.ndarray:
    """Dense matrix exponential of the loop at the ``N``-th roots of unity."""
    return scipy.linalg.expm(samples(loop, N))


@dataclass
class LocalFactorization:
    plus: MatrixLoop
    minus: MatrixLoop
    residual: float
    split: SplitResult

    def __iter__(self):
        return iter((self.plus, self.minus))


def group_factorize_local(
    g: MatrixLoop,
    rep: LieAlgebraRep,
    order: int = DEFAULT_ORDER,
    radius: float = DEFAULT_RADIUS,
    tol: float = 1e-8,
    N: int = 256,
) -> LocalFactorization:
    """Factor ``g = exp(P+ x) exp(P- x)`` for ``g`` near the identity.

    ``y = log(g)`` must lie in the loop algebra of ``rep`` with
    ``||y||_W <= radius/4``.  The minus factor equals the identity at
    infinity by construction.  Unpacks as ``plus, minus``.
    """
    y = LoopAlgebraElement.project(rep, log_loop(g))
    sol = split_solve(y, order, radius)
    plus = exp_loop(project_plus(sol.x.series))
    minus = exp_loop(project_ominus(sol.x.series))
    diff = samples(plus @ minus, N) - samples(g, N)
    residual = float(np.max(matrix_norm(diff)))
    if residual > tol:
        raise NumericError(f"local factorization residual {residual:.3e} exceeds {tol:.1e}", residual=residual)
    return LocalFactorization(plus, minus, residual, sol)
