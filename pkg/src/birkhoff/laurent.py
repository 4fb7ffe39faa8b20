"""Banded Laurent series on the unit circle.

A :class:`LaurentSeries` stores the coefficients of ``sum_k c_k z**k`` for
``kmin <= k <= kmax`` as a dense complex array.  :class:`MatrixLoop` is the
same object with an ``(n, n)`` matrix in each slot; arithmetic on the two is
shared.  Coefficient ``k`` is the coefficient of ``z**k``, i.e.

    c_k = int_0^1 exp(-2 pi i k t) f(exp(2 pi i t)) dt,

so the monomial ``z**m`` has exactly one nonzero coefficient, at ``m``.

Every band-growing operation is capped by the active :class:`TruncationPolicy`
(see :func:`truncation_policy`); whatever falls off the ends is accounted in
``tail`` and an error is raised once it exceeds the tolerance.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, InvalidArgumentError, TruncationError

__all__ = [
    "TruncationPolicy",
    "truncation_policy",
    "get_policy",
    "LaurentSeries",
    "MatrixLoop",
    "circle_points",
    "fourier_coeff",
    "samples",
    "from_samples",
    "fit_samples",
    "eval_circle",
    "eval_disk",
    "eval_exterior",
    "evaluate",
    "add",
    "negate",
    "scalar_mul",
    "shift",
    "multiply",
    "monomial",
    "constant",
]

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class TruncationPolicy:
    band_cap: int = 512
    tail_tol: float = 1e-10
    coeff_eps: float = 1e-14


_POLICY = contextvars.ContextVar("birkhoff_truncation_policy", default=TruncationPolicy())


def get_policy() -> TruncationPolicy:
    return _POLICY.get()


@contextlib.contextmanager
def truncation_policy(**overrides):
    """Temporarily override fields of the active truncation policy.

    The policy lives in a context variable, so overrides made in one thread
    (or one ``contextvars`` context) never leak into another.

    >>> with truncation_policy(band_cap=64):
    ...     get_policy().band_cap
    64
    """
    token = _POLICY.set(replace(_POLICY.get(), **overrides))
    try:
        yield _POLICY.get()
    finally:
        _POLICY.reset(token)


def _slot_mass(coeffs):
    """Per-exponent magnitude: modulus for scalars, Frobenius for matrices."""
    if coeffs.ndim == 1:
        return np.abs(coeffs)
    # hypot avoids overflow for entries near the float limit
    return np.hypot.reduce(np.abs(coeffs).reshape(coeffs.shape[0], -1), axis=1)


class _Banded:
    """Shared machinery; use :class:`LaurentSeries` or :class:`MatrixLoop`."""

    __slots__ = ("kmin", "coeffs", "tail")
    _slot_ndim = 0

    def __init__(self, coeffs, kmin=0, *, tail=0.0, canonical=True):
        c = np.array(coeffs, dtype=complex)
        if c.ndim != 1 + self._slot_ndim:
            raise InvalidArgumentError(
                f"{type(self).__name__} needs a {1 + self._slot_ndim}-d coefficient array, got shape {c.shape}"
            )
        if c.shape[0] == 0:
            c = np.zeros((1,) + c.shape[1:], dtype=complex)
            kmin = 0
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")
        kmin = int(kmin)
        if canonical:
            c, kmin, tail = _canonicalize(c, kmin, tail)
        c.flags.writeable = False
        object.__setattr__(self, "kmin", kmin)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "tail", float(tail))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _new(self, coeffs, kmin, tail=0.0):
        return type(self)(coeffs, kmin, tail=tail)

    @property
    def kmax(self) -> int:
        return self.kmin + self.coeffs.shape[0] - 1

    @property
    def band(self) -> tuple[int, int]:
        return self.kmin, self.kmax

    @property
    def width(self) -> int:
        return self.kmax - self.kmin

    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 1 and not np.any(self.coeffs)

    def coefficient(self, k: int):
        if self.kmin <= k <= self.kmax:
            return self.coeffs[k - self.kmin]
        return np.zeros(self.coeffs.shape[1:], dtype=complex)[()]

    def padded(self, kmin: int, kmax: int) -> np.ndarray:
        """Coefficient array over ``[kmin, kmax]``, zero outside the band."""
        out = np.zeros((kmax - kmin + 1,) + self.coeffs.shape[1:], dtype=complex)
        lo, hi = max(kmin, self.kmin), min(kmax, self.kmax)
        if lo <= hi:
            out[lo - kmin : hi - kmin + 1] = self.coeffs[lo - self.kmin : hi - self.kmin + 1]
        return out

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.kmin == other.kmin and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, negate(_as_banded(other, self)))

    def __rsub__(self, other):
        return add(_as_banded(other, self), negate(self))

    def __neg__(self):
        return negate(self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scalar_mul(self, other)
        return multiply(self, other)

    def __rmul__(self, other):
        if np.isscalar(other):
            return scalar_mul(self, other)
        return multiply(other, self)

    def __truediv__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return scalar_mul(self, 1.0 / other)


class LaurentSeries(_Banded):
    """Scalar banded Laurent series ``sum_{k=kmin}^{kmax} coeffs[k-kmin] z**k``.

    >>> f = LaurentSeries([3, 0, 0, 4], kmin=-1)    # 3/z + 4 z**2
    >>> f.band
    (-1, 2)
    """

    __slots__ = ()
    _slot_ndim = 0

    def __repr__(self):
        return f"LaurentSeries(kmin={self.kmin}, coeffs={np.array2string(self.coeffs, precision=6)})"


class MatrixLoop(_Banded):
    """``n x n`` matrix-valued banded Laurent series, stored as ``coeffs[k-kmin]``."""

    __slots__ = ()
    _slot_ndim = 2

    def __init__(self, coeffs, kmin=0, *, tail=0.0, canonical=True):
        c = np.asarray(coeffs)
        if c.ndim == 3 and c.shape[1] != c.shape[2]:
            raise InvalidArgumentError(f"matrix coefficients must be square, got {c.shape[1:]}")
        if c.ndim == 3 and c.shape[1] == 0:
            raise InvalidArgumentError("matrix dimension must be >= 1")
        super().__init__(coeffs, kmin, tail=tail, canonical=canonical)

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    def entry(self, i: int, j: int) -> LaurentSeries:
        return LaurentSeries(self.coeffs[:, i, j], self.kmin)

    @classmethod
    def from_entries(cls, entries) -> "MatrixLoop":
        """Assemble from an ``n x n`` nested list of :class:`LaurentSeries`."""
        n = len(entries)
        if n == 0 or any(len(row) != n for row in entries):
            raise InvalidArgumentError("entries must form a non-empty square array")
        lo = min(e.kmin for row in entries for e in row)
        hi = max(e.kmax for row in entries for e in row)
        c = np.zeros((hi - lo + 1, n, n), dtype=complex)
        for i, row in enumerate(entries):
            for j, e in enumerate(row):
                c[:, i, j] = e.padded(lo, hi)
        return cls(c, lo)

    @classmethod
    def identity(cls, n: int) -> "MatrixLoop":
        return cls(np.eye(n, dtype=complex)[None], 0)

    @classmethod
    def constant(cls, m) -> "MatrixLoop":
        m = np.asarray(m, dtype=complex)
        return cls(m[None], 0)

    @classmethod
    def diag(cls, series) -> "MatrixLoop":
        n = len(series)
        zero = LaurentSeries([0])
        return cls.from_entries([[series[i] if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def monomial_diag(cls, exponents) -> "MatrixLoop":
        """``diag(z**k1, ..., z**kn)``."""
        return cls.diag([monomial(k) for k in exponents])

    def transpose(self) -> "MatrixLoop":
        return MatrixLoop(np.swapaxes(self.coeffs, 1, 2), self.kmin, tail=self.tail)

    def map_coeffs(self, fn) -> "MatrixLoop":
        return MatrixLoop(fn(self.coeffs), self.kmin)

    def __matmul__(self, other):
        return multiply(self, other)

    def __rmatmul__(self, other):
        return multiply(other, self)

    def __repr__(self):
        return f"MatrixLoop(n={self.n}, band={self.band})"


def _canonicalize(c, kmin, tail):
    eps = get_policy().coeff_eps
    mass = _slot_mass(c)
    keep = np.nonzero(mass > eps)[0]
    if keep.size == 0:
        return np.zeros((1,) + c.shape[1:], dtype=complex), 0, tail + float(mass.sum())
    lo, hi = keep[0], keep[-1]
    dropped = float(mass[:lo].sum() + mass[hi + 1 :].sum())
    return c[lo : hi + 1].copy(), kmin + int(lo), tail + dropped


def _apply_cap(c, kmin, tail):
    """Trim to the policy's band cap, dropping whichever end is lighter first."""
    policy = get_policy()
    extra = c.shape[0] - policy.band_cap
    if extra <= 0:
        return c, kmin, tail
    mass = _slot_mass(c)
    lo, hi = 0, c.shape[0]
    for _ in range(extra):
        if mass[lo] <= mass[hi - 1]:
            lo += 1
        else:
            hi -= 1
    dropped = float(mass[:lo].sum() + mass[hi:].sum())
    if dropped > policy.tail_tol:
        raise TruncationError(
            f"band cap {policy.band_cap} exceeded; discarded l1 mass {dropped:.3e} "
            f"> tolerance {policy.tail_tol:.1e}",
            tail_mass=dropped,
        )
    return c[lo:hi], kmin + lo, tail + dropped


def _build(cls, c, kmin, tail=0.0):
    c, kmin, tail = _canonicalize(np.asarray(c, dtype=complex), kmin, tail)
    c, kmin, tail = _apply_cap(c, kmin, tail)
    return cls(c, kmin, tail=tail, canonical=False)


def _as_banded(x, like):
    if isinstance(x, _Banded):
        return x
    if np.isscalar(x):
        if isinstance(like, MatrixLoop):
            return MatrixLoop.constant(x * np.eye(like.n))
        return LaurentSeries([x])
    if isinstance(like, MatrixLoop):
        return MatrixLoop.constant(x)
    raise InvalidArgumentError(f"cannot combine {type(x).__name__} with {type(like).__name__}")


def monomial(k: int, c: complex = 1.0) -> LaurentSeries:
    return LaurentSeries([c], k)


def constant(c: complex) -> LaurentSeries:
    return LaurentSeries([c], 0)


def fourier_coeff(f: LaurentSeries, k: int):
    """Coefficient of ``z**k`` (zero outside the band)."""
    return f.coefficient(k)


def circle_points(N: int) -> np.ndarray:
    """The ``N``-th roots of unity ``exp(2 pi i j / N)``, ``j = 0..N-1``."""
    return np.exp(2j * np.pi * np.arange(N) / N)


def samples(f, N: int) -> np.ndarray:
    """Values of ``f`` at the ``N``-th roots of unity, via an inverse FFT.

    Exact for any ``N``: exponents are folded modulo ``N`` first.
    """
    folded = np.zeros((N,) + f.coeffs.shape[1:], dtype=complex)
    idx = np.arange(f.kmin, f.kmax + 1) % N
    np.add.at(folded, idx, f.coeffs)
    return np.fft.ifft(folded, axis=0) * N


def from_samples(values, band):
    """Recover a banded series from its values at the ``N``-th roots of unity.

    ``values`` has shape ``(N,)`` (scalar) or ``(N, n, n)`` (matrix).  The
    result is exact for input that is band-limited to ``band``; otherwise
    exponents congruent modulo ``N`` alias onto the band.
    """
    values = np.asarray(values, dtype=complex)
    kmin, kmax = int(band[0]), int(band[1])
    N = values.shape[0]
    if kmax < kmin:
        raise InvalidArgumentError(f"empty band {band}")
    if kmax - kmin + 1 > N:
        raise InvalidArgumentError(f"band {band} is wider than N-1 = {N - 1}")
    folded = np.fft.fft(values, axis=0) / N
    c = folded[np.arange(kmin, kmax + 1) % N]
    cls = LaurentSeries if values.ndim == 1 else MatrixLoop
    return _build(cls, c, kmin)


def fit_samples(func, cls, N0=64, *, gap_tol=1e-15, N_max=None):
    """Build a series from a pointwise function on the circle, choosing band and ``N``.

    ``func(z)`` is evaluated on ``N`` roots of unity with ``N`` doubling from
    ``N0`` until the cyclic DFT has a quiet stretch (a quarter of the grid
    whose largest coefficient is below ``gap_tol`` relative to the peak).  The
    band is cut in the middle of that stretch, so the result holds the
    two-sided decaying coefficients of a smooth, non-banded function.

    Returns ``(series, gap)`` where ``gap`` is the relative size of the
    largest coefficient in the discarded stretch.
    """
    policy = get_policy()
    if N_max is None:
        N_max = max(4 * policy.band_cap, N0)
    N = 1 << max(int(N0) - 1, 1).bit_length()
    while True:
        values = np.asarray(func(circle_points(N)), dtype=complex)
        folded = np.fft.fft(values, axis=0) / N
        mass = _slot_mass(folded)
        peak = float(mass.max()) or 1.0
        w = max(N // 4, 1)
        ext = np.concatenate([mass, mass[: w - 1]])
        win = np.lib.stride_tricks.sliding_window_view(ext, w).max(axis=1)
        s = int(np.argmin(win))
        gap = float(win[s]) / peak
        if gap <= gap_tol or N >= N_max:
            break
        N *= 2
    c = (s + w // 2) % N
    exps = np.arange(N)
    exps = np.where(exps <= c, exps, exps - N)
    order = np.argsort(exps)
    kmin = int(exps[order[0]])
    return _build(cls, folded[order], kmin), gap


def evaluate(f, z):
    """Evaluate the series at arbitrary nonzero points (array-valued ``z``)."""
    z = np.asarray(z, dtype=complex)
    ks = np.arange(f.kmin, f.kmax + 1)
    powers = z[..., None] ** ks
    return np.tensordot(powers, f.coeffs, axes=([-1], [0]))


def _check_unit(z):
    if abs(abs(z) - 1.0) > UNIT_TOL:
        raise InvalidArgumentError(f"|z| = {abs(z)!r} is not on the unit circle")


def eval_circle(f, z):
    """Value of the loop at ``z`` with ``|z| = 1``."""
    _check_unit(z)
    return evaluate(f, z)[()]


def eval_disk(f, z):
    """Holomorphic extension of ``f`` into the closed unit disk.

    Defined only when ``f`` has no negative exponents.  ``z`` may be an array.
    """
    if f.kmin < 0 and not f.is_zero():
        raise DomainError("series has negative exponents; no extension into the disk")
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1.0 + UNIT_TOL):
        raise InvalidArgumentError(f"|z| = {np.abs(z).max()!r} lies outside the closed disk")
    zz = z.reshape(z.shape + (1,) * (f.coeffs.ndim - 1))
    # Horner in z keeps z = 0 exact
    acc = np.zeros(z.shape + f.coeffs.shape[1:], dtype=complex)
    for c in f.padded(0, max(f.kmax, 0))[::-1]:
        acc = acc * zz + c
    return acc[()]


def eval_exterior(f, z):
    """Extension of ``f`` to ``|z| >= 1`` including ``z = inf``, where it is 0.

    Defined only when every exponent is negative.  ``z`` may be an array;
    ``None`` stands for infinity.
    """
    if f.kmax > -1 and not f.is_zero():
        raise DomainError("series has nonnegative exponents; no extension vanishing at infinity")
    if z is None:
        z = np.inf
    z = np.asarray(z, dtype=complex)
    inf = np.isinf(z)
    if np.any(np.abs(z[~inf]) < 1.0 - UNIT_TOL):
        raise InvalidArgumentError(f"|z| = {np.abs(z[~inf]).min()!r} lies inside the unit disk")
    w = np.where(inf, 0.0, 1.0 / np.where(inf, 1.0, z))
    w = w.reshape(w.shape + (1,) * (f.coeffs.ndim - 1))
    acc = np.zeros(z.shape + f.coeffs.shape[1:], dtype=complex)
    # sum_{k>=1} c_{-k} w**k
    for c in f.padded(min(f.kmin, -1), -1):
        acc = (acc + c) * w
    return acc[()]


def add(f, g):
    f = _as_banded(f, g)
    g = _as_banded(g, f)
    if isinstance(f, MatrixLoop) != isinstance(g, MatrixLoop):
        raise InvalidArgumentError("cannot add a scalar series to a matrix loop; scale by the identity")
    lo, hi = min(f.kmin, g.kmin), max(f.kmax, g.kmax)
    return _build(type(f), f.padded(lo, hi) + g.padded(lo, hi), lo, f.tail + g.tail)


def negate(f):
    return type(f)(-f.coeffs, f.kmin, tail=f.tail, canonical=False)


def scalar_mul(f, a: complex):
    return _build(type(f), f.coeffs * a, f.kmin, f.tail * abs(a))


def shift(f, m: int):
    """``z**m * f``; exact (only the band moves)."""
    return type(f)(f.coeffs, f.kmin + int(m), tail=f.tail, canonical=False)


def _cauchy(a, b):
    if a.ndim == 1 and b.ndim == 1:
        return np.convolve(a, b)
    out_shape = (a.shape[0] + b.shape[0] - 1,) + np.broadcast_shapes(
        _slot_shape(a, b), _slot_shape(b, a)
    )
    out = np.zeros(out_shape, dtype=complex)
    mat = a.ndim == 3 and b.ndim == 3
    if a.shape[0] <= b.shape[0]:
        for i in range(a.shape[0]):
            out[i : i + b.shape[0]] += (a[i] @ b) if mat else _bmul(a[i], b)
    else:
        for j in range(b.shape[0]):
            out[j : j + a.shape[0]] += (a @ b[j]) if mat else _bmul(a, b[j])
    return out


def _slot_shape(a, b):
    return a.shape[1:] if a.ndim == 3 else b.shape[1:]


def _bmul(x, y):
    # scalar-times-matrix slot products with broadcasting over the stacked axis
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim == 1:
        x = x[:, None, None]
    if y.ndim == 1:
        y = y[:, None, None]
    return x * y


def multiply(f, g):
    """Cauchy product; for matrix loops each slot product is a matrix product.

    A scalar series times a matrix loop scales every entry.
    """
    if isinstance(f, MatrixLoop) or isinstance(g, MatrixLoop):
        cls = MatrixLoop
    else:
        cls = LaurentSeries
    c = _cauchy(f.coeffs, g.coeffs)
    tail = f.tail * _mass(g) + g.tail * _mass(f) + f.tail * g.tail
    return _build(cls, c, f.kmin + g.kmin, tail)


def _mass(f):
    return float(_slot_mass(f.coeffs).sum())
