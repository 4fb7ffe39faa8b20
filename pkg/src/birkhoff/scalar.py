"""Winding numbers and scalar factorizations ``g = g_plus * z**kappa * g_minus``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError, NotInvertibleError, NumericError, TruncationError
from .laurent import LaurentSeries, samples, shift
from .norms import (
    disk_margin,
    exp_loop,
    exterior_margin,
    is_invertible_on_circle,
    log_loop,
    project_ominus,
    project_plus,
    wiener_distance,
)

__all__ = [
    "ScalarFactorization",
    "winding_number",
    "factor_laurent_poly",
    "scalar_factorize",
]

RESIDUAL_TOL = 1e-8
ROOT_CIRCLE_TOL = 1e-8


@dataclass(frozen=True)
class ScalarFactorization:
    """``g = plus * z**kappa * minus`` with ``minus(inf) = 1``."""

    plus: LaurentSeries
    kappa: int
    minus: LaurentSeries
    residual: float
    plus_margin: float = float("nan")
    minus_margin: float = float("nan")
    method: str = ""

    def reconstruct(self) -> LaurentSeries:
        return shift(self.plus * self.minus, self.kappa)


def _winding_from_values(v):
    steps = np.angle(np.roll(v, -1) / v)
    return float(np.sum(steps) / (2 * np.pi)), float(np.max(np.abs(steps)))


def winding_number(g: LaurentSeries, N: int | None = None) -> int:
    """Winding number of ``g`` around 0 from unwrapped argument increments.

    Without an explicit ``N`` the grid is refined until no sample-to-sample
    increment exceeds ``pi/2``.
    """
    min_N = 8 * (g.width + 1)
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"g is not invertible on the circle (margin {check.margin:.3e})", check.margin)
    if N is not None and N < min_N:
        raise InvalidArgumentError(f"need N >= 8*(band width) = {min_N}, got {N}")
    auto = N is None
    if auto:
        N = max(256, min_N)
    while True:
        turns, biggest = _winding_from_values(samples(g, N))
        if biggest <= np.pi / 2:
            break
        if not auto or N > 1 << 20:
            raise NumericError(f"argument increments up to {biggest:.2f} rad; increase N or margin")
        N *= 2
    k = round(turns)
    if abs(turns - k) > 0.01:
        raise NumericError(f"winding {turns:.4f} is not near an integer; increase N or margin")
    return int(k)


def _margins(plus, minus):
    return disk_margin(plus), exterior_margin(minus)


def factor_laurent_poly(g: LaurentSeries) -> ScalarFactorization:
    """Factor a Laurent polynomial through the roots of ``z**(-kmin) g``.

    Roots outside the disk go to ``plus`` (with the leading coefficient),
    roots inside become factors ``1 - w/z`` of ``minus``; each inside root
    raises ``kappa`` by one.
    """
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"g is not invertible on the circle (margin {check.margin:.3e})", check.margin)
    lead = g.coeffs[-1]
    roots = np.roots(g.coeffs[::-1]) if g.width > 0 else np.zeros(0, dtype=complex)
    mods = np.abs(roots)
    if np.any(np.abs(mods - 1.0) < ROOT_CIRCLE_TOL):
        raise NotInvertibleError("not invertible on circle: a root lies on the unit circle")
    outside, inside = roots[mods > 1.0], roots[mods < 1.0]
    plus = LaurentSeries(lead * np.atleast_1d(np.poly(outside))[::-1], 0)
    minus = LaurentSeries(np.atleast_1d(np.poly(inside))[::-1], -len(inside))
    kappa = g.kmin + len(inside)
    residual = wiener_distance(g, shift(plus * minus, kappa))
    return ScalarFactorization(plus, kappa, minus, residual, *_margins(plus, minus), method="roots")


def _factor_exp_log(g, tol):
    kappa = winding_number(g)
    x = log_loop(shift(g, -kappa))
    plus = exp_loop(project_plus(x))
    minus = exp_loop(project_ominus(x))
    c = minus.coefficient(0)
    if c != 1.0:
        minus, plus = minus / c, plus * c
    residual = wiener_distance(g, shift(plus * minus, kappa))
    if residual > tol:
        raise TruncationError(f"exp/log factorization residual {residual:.3e} > {tol:.1e}", residual=residual)
    return ScalarFactorization(plus, kappa, minus, residual, *_margins(plus, minus), method="exp-log")


def scalar_factorize(g: LaurentSeries, method: str = "auto", tol: float = RESIDUAL_TOL) -> ScalarFactorization:
    """Birkhoff factorization of an invertible scalar loop.

    ``method`` is ``"exp-log"`` (remove the winding, split the logarithm),
    ``"roots"`` (:func:`factor_laurent_poly`) or ``"auto"``, which tries
    exp/log first and falls back to roots when that route degrades.
    """
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"g is not invertible on the circle (margin {check.margin:.3e})", check.margin)
    if method == "roots":
        fact = factor_laurent_poly(g)
    elif method in ("exp-log", "exp"):
        fact = _factor_exp_log(g, tol)
    elif method == "auto":
        try:
            fact = _factor_exp_log(g, tol)
        except (TruncationError, NumericError, DomainError) as exc:
            if isinstance(exc, NotInvertibleError):
                raise
            fact = factor_laurent_poly(g)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    if fact.residual > tol:
        raise TruncationError(f"factorization residual {fact.residual:.3e} > {tol:.1e}", residual=fact.residual)
    return fact
