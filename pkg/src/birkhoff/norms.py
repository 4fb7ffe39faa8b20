"""Wiener-type norms, the splitting projections, invertibility and exp/log of loops."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidArgumentError, NotInvertibleError, TruncationError
from .laurent import (
    LaurentSeries,
    MatrixLoop,
    add,
    evaluate,
    fit_samples,
    get_policy,
    multiply,
    samples,
    scalar_mul,
    truncation_policy,
)

__all__ = [
    "matrix_norm",
    "wiener_norm",
    "wiener_distance",
    "weighted_wiener_norm",
    "sup_circle",
    "annulus_norm",
    "NormReport",
    "norm_report",
    "project_plus",
    "project_ominus",
    "reflect",
    "disk_margin",
    "exterior_margin",
    "Invertibility",
    "is_invertible_on_circle",
    "invert",
    "exp_loop",
    "log_loop",
]

INVERTIBILITY_FLOOR = 1e-8
INVERSION_TOL = 1e-10


def matrix_norm(m, kind: str = "spectral"):
    """Submultiplicative norm of a stack of matrices (last two axes).

    ``kind`` is ``"spectral"`` (largest singular value), ``"fro"`` or
    ``"l1"`` (max column sum).
    """
    m = np.asarray(m)
    if kind == "spectral":
        return np.linalg.norm(m, ord=2, axis=(-2, -1))
    if kind == "fro":
        return np.linalg.norm(m, ord="fro", axis=(-2, -1))
    if kind == "l1":
        return np.linalg.norm(m, ord=1, axis=(-2, -1))
    raise InvalidArgumentError(f"unknown matrix norm {kind!r}")


def _slot_norms(f, kind="spectral"):
    if isinstance(f, MatrixLoop):
        return matrix_norm(f.coeffs, kind)
    return np.abs(f.coeffs)


def _pointwise_norms(values, kind="spectral"):
    values = np.asarray(values)
    if values.ndim >= 3:
        return matrix_norm(values, kind)
    return np.abs(values)


def wiener_norm(f, kind: str = "spectral") -> float:
    """l1 norm of the coefficient sequence (matrix slots measured by ``kind``)."""
    return float(np.sum(_slot_norms(f, kind)))


def wiener_distance(f, g, kind: str = "spectral") -> float:
    """``||f - g||_W`` on the raw coefficients (no fringe trimming)."""
    lo, hi = min(f.kmin, g.kmin), max(f.kmax, g.kmax)
    d = f.padded(lo, hi) - g.padded(lo, hi)
    if d.ndim == 3:
        return float(np.sum(matrix_norm(d, kind)))
    return float(np.sum(np.abs(d)))


def weighted_wiener_norm(f, m: float, kind: str = "spectral") -> float:
    """``sum_k max(|k|**m, 1) |c_k|``."""
    if m < 0:
        raise InvalidArgumentError("weight exponent must be nonnegative")
    ks = np.abs(np.arange(f.kmin, f.kmax + 1, dtype=float))
    weights = np.maximum(ks**m, 1.0)
    return float(np.sum(weights * _slot_norms(f, kind)))


def _default_grid(f, minimum=1024):
    return max(minimum, 4 * (f.width + 1))


def sup_circle(f, N: int | None = None, kind: str = "spectral") -> float:
    """Sampled sup of ``|f|`` on the unit circle."""
    N = N or _default_grid(f)
    return float(_pointwise_norms(samples(f, N), kind).max())


def _radial(f, r):
    ks = np.arange(f.kmin, f.kmax + 1, dtype=float)
    scale = r**ks
    if isinstance(f, MatrixLoop):
        scale = scale[:, None, None]
    return type(f)(f.coeffs * scale, f.kmin, canonical=False)


def annulus_norm(f, n: int, N: int | None = None, kind: str = "spectral") -> float:
    """``max(sup_{A_n} |f|, ||f||_W)`` on ``A_n = {1 - 1/n < |z| < 1 + 1/n}``.

    For a Laurent polynomial the sup over the closed annulus sits on one of
    the two boundary circles, which are sampled with ``N`` points each.
    """
    if n < 1:
        raise InvalidArgumentError("annulus parameter must be a positive integer")
    N = N or _default_grid(f)
    sup = max(sup_circle(_radial(f, 1.0 - 1.0 / n), N, kind), sup_circle(_radial(f, 1.0 + 1.0 / n), N, kind))
    return max(sup, wiener_norm(f, kind))


@dataclass
class NormReport:
    wiener: float
    sup_circle: float
    weighted: dict = field(default_factory=dict)
    annulus: dict = field(default_factory=dict)


def norm_report(f, weights=(0, 1, 2), annuli=(2, 4, 8), kind: str = "spectral") -> NormReport:
    return NormReport(
        wiener=wiener_norm(f, kind),
        sup_circle=sup_circle(f, kind=kind),
        weighted={m: weighted_wiener_norm(f, m, kind) for m in weights},
        annulus={n: annulus_norm(f, n, kind=kind) for n in annuli},
    )


def project_plus(f):
    """Keep exponents ``k >= 0`` (pure coefficient surgery)."""
    if f.kmax < 0:
        return type(f)(np.zeros((1,) + f.coeffs.shape[1:]), 0)
    lo = max(f.kmin, 0)
    return _slice(f, f.coeffs[lo - f.kmin :], lo)


def project_ominus(f):
    """Keep exponents ``k <= -1``."""
    if f.kmin > -1:
        return type(f)(np.zeros((1,) + f.coeffs.shape[1:]), 0)
    hi = min(f.kmax, -1)
    return _slice(f, f.coeffs[: hi - f.kmin + 1], f.kmin)


def _slice(f, c, kmin):
    # strip exact zeros only, so that P+ f + P- f == f holds bit for bit
    nz = np.nonzero(np.any(c.reshape(c.shape[0], -1) != 0, axis=1))[0]
    if nz.size == 0:
        return type(f)(np.zeros((1,) + c.shape[1:]), 0)
    return type(f)(c[nz[0] : nz[-1] + 1], kmin + int(nz[0]), canonical=False)


@dataclass(frozen=True)
class Invertibility:
    invertible: bool
    margin: float

    def __bool__(self):
        return self.invertible


def _pointwise_margin(values):
    values = np.asarray(values)
    if values.ndim == 1:
        return float(np.min(np.abs(values)))
    return float(np.min(np.linalg.svd(values, compute_uv=False)[..., -1]))


def is_invertible_on_circle(g, N: int | None = None, floor: float = INVERTIBILITY_FLOOR) -> Invertibility:
    """Minimum of ``|g|`` (or of the smallest singular value) over ``N`` samples."""
    min_N = 4 * (g.width + 1)
    if N is None:
        N = max(256, min_N)
    elif N < min_N:
        raise InvalidArgumentError(f"need N >= 4*(band width) = {min_N}, got {N}")
    margin = _pointwise_margin(samples(g, N))
    return Invertibility(margin > floor, margin)


def reflect(f):
    """``z -> f(1/z)``: exponent ``k`` becomes ``-k``."""
    return type(f)(f.coeffs[::-1], -f.kmax, canonical=False)


def disk_margin(f, radii: int = 17, angles: int = 128) -> float:
    """Smallest ``|f|`` (or smallest singular value) on a polar grid of the closed disk.

    Only meaningful for ``f`` without negative exponents.
    """
    r = np.linspace(0.0, 1.0, radii)[:, None]
    z = (r * np.exp(2j * np.pi * np.arange(angles) / angles)).ravel()
    ks = np.arange(0, f.kmax + 1)
    powers = z[:, None] ** ks
    coeffs = f.padded(0, f.kmax)
    return _pointwise_margin(np.tensordot(powers, coeffs, axes=([1], [0])))


def exterior_margin(f, radii: int = 17, angles: int = 128) -> float:
    """Smallest ``|f|`` on ``|z| >= 1`` including infinity (``f`` without positive exponents)."""
    return disk_margin(reflect(f), radii, angles)


def _identity_like(g):
    if isinstance(g, MatrixLoop):
        return MatrixLoop.identity(g.n)
    return LaurentSeries([1.0])


def _pointwise_inverse(values):
    if values.ndim == 1:
        return 1.0 / values
    return np.linalg.inv(values)


def invert(g, tol: float = INVERSION_TOL):
    """Inverse in the Wiener algebra, by pointwise inversion on a circle grid.

    The grid is refined until the sampled inverse has decayed into a quiet
    band; the result is accepted only if ``||g h - 1||_W <= tol``.
    """
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"loop is not invertible on the circle (margin {check.margin:.3e})", check.margin)
    if g.width == 0:
        if isinstance(g, MatrixLoop):
            return MatrixLoop(np.linalg.inv(g.coeffs[0])[None], -g.kmin)
        return LaurentSeries([1.0 / g.coeffs[0]], -g.kmin)
    cls = type(g)
    h, _ = fit_samples(lambda z: _pointwise_inverse(evaluate(g, z)), cls, N0=4 * (g.width + 1))
    residual = wiener_distance(multiply(g, h), _identity_like(g))
    if residual > tol:
        raise TruncationError(
            f"inverse residual {residual:.3e} exceeds tolerance {tol:.1e} within band cap {get_policy().band_cap}",
            residual=residual,
        )
    return h


def exp_loop(f, term_tol: float = 1e-17):
    """Exponential of a loop in the Wiener algebra.

    Power series on ``f / 2**s`` (with ``||f||_W / 2**s <= 1/2``) summed until
    the next term drops below ``term_tol``, then squared ``s`` times.
    """
    if isinstance(f, LaurentSeries) and f.kmin <= 0 <= f.kmax:
        # scalar slots commute: exp(c0 + rest) = e**c0 * exp(rest)
        c0 = f.coefficient(0)
        if c0 != 0:
            rest = add(f, LaurentSeries([-c0]))
            return scalar_mul(exp_loop(rest, term_tol), np.exp(c0))
    norm = wiener_norm(f)
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    # sum with a finer coefficient cut so that small edge terms survive the squarings
    with truncation_policy(coeff_eps=min(get_policy().coeff_eps, 1e-22)):
        x = scalar_mul(f, 2.0**-s) if s else f
        one = _identity_like(f)
        total = one
        term = one
        for k in range(1, 200):
            term = scalar_mul(multiply(term, x), 1.0 / k)
            total = add(total, term)
            if wiener_norm(term) < term_tol:
                break
        for _ in range(s):
            total = multiply(total, total)
    return type(total)(total.coeffs, total.kmin, tail=total.tail)


def _scalar_log_values(g):
    """Continuous logarithm sampled on a grid, or ``None`` if undersampled."""

    def values(z):
        v = evaluate(g, z)
        steps = np.angle(np.roll(v, -1) / v)
        if np.max(np.abs(steps)) > np.pi / 2:
            raise _Undersampled
        arg = np.angle(v[0]) + np.concatenate([[0.0], np.cumsum(steps[:-1])])
        turns = np.sum(steps) / (2 * np.pi)
        if abs(turns) > 0.5:
            raise DomainError("no continuous logarithm: loop has nonzero winding number")
        return np.log(np.abs(v)) + 1j * arg

    return values


class _Undersampled(Exception):
    pass


def _mercator(values, max_terms=4000, tol=1e-17):
    """``log(I + X)`` by the Mercator series, for a stack of matrices ``I + X``."""
    n = values.shape[-1]
    x = values - np.eye(n)
    rho = np.max(np.abs(np.linalg.eigvals(x)))
    if rho >= 1.0:
        raise DomainError(f"Mercator series diverges: spectral radius of g - I reaches {rho:.3f}")
    total = np.zeros_like(x)
    power = np.broadcast_to(np.eye(n, dtype=complex), x.shape).copy()
    for k in range(1, max_terms + 1):
        power = power @ x
        term = power * ((-1) ** (k + 1) / k)
        total += term
        if np.max(np.abs(term)) < tol:
            return total
    raise DomainError("Mercator series did not converge (g too far from the identity)")


def log_loop(g):
    """Logarithm of a loop.

    Scalar loops: continuous branch of the pointwise logarithm, starting from
    the principal value at ``z = 1``; requires winding number 0.  Matrix
    loops: pointwise Mercator series ``log(I + (g - I))``.
    """
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"loop is not invertible on the circle (margin {check.margin:.3e})", check.margin)
    if isinstance(g, MatrixLoop):
        out, _ = fit_samples(lambda z: _mercator(evaluate(g, z)), MatrixLoop, N0=4 * (g.width + 1))
        return out
    N0 = max(64, 8 * (g.width + 1))
    fn = _scalar_log_values(g)
    while True:
        try:
            out, _ = fit_samples(fn, LaurentSeries, N0=N0)
            return out
        except _Undersampled:
            N0 *= 2
            if N0 > 64 * get_policy().band_cap:
                raise DomainError("could not resolve the argument of g on the circle; increase sampling")
