"""Matrix Birkhoff factorization ``g = A_plus D A_minus`` with partial indices.

Convention: ``A_plus`` (holomorphic in the disk) is on the left,
``D = diag(z**k_1, ..., z**k_n)`` with ``k_1 >= ... >= k_n``, and
``A_minus`` (holomorphic outside, including infinity) on the right.  For the
opposite order factor the transpose.

Everything rests on one linear problem.  For a trial tuple ``k`` look for a
polynomial matrix ``U`` (degree <= K) whose row ``j`` satisfies

    (u_j g)_m = 0          for m > k_j,
    (u_j g)_{k_j}[i] = delta_ij   for columns i in or after the index block of j.

Then ``V = D^{-1} U g`` (keeping exponents <= k_j in row j) has no positive
exponents and ``A_plus = U^{-1}``, ``A_minus = V``.  The column conditions make
the constant term of ``A_minus`` unit lower triangular with identity blocks on
repeated indices; for all-zero indices it is the identity.  The system is a
block-Toeplitz finite section solved by least squares and grown (``K``
doubled) while the residual keeps improving.  If the trial tuple is wrong the
system is inconsistent, and uniqueness of partial indices makes the first
tuple that reproduces ``g`` the answer.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IndexObstructionError,
    InvalidArgumentError,
    InvariantViolation,
    NotInvertibleError,
    NumericError,
)
from .laurent import MatrixLoop, from_samples, samples
from .norms import (
    INVERTIBILITY_FLOOR,
    disk_margin,
    exterior_margin,
    invert,
    is_invertible_on_circle,
    matrix_norm,
    project_plus,
    wiener_distance,
)
from .scalar import winding_number

__all__ = [
    "MatrixFactorization",
    "VerificationReport",
    "CouplingResult",
    "det_loop",
    "total_index",
    "index_tuples",
    "canonical_factorize",
    "partial_indices",
    "full_factorize",
    "verify_factorization",
    "check_coupling_structure",
    "coupling_matrix",
]

RESIDUAL_TOL = 1e-8
K_CAP = 256
QUICK_REJECT = 0.1
RCOND_OBSTRUCTION = 1e-10


@dataclass(frozen=True)
class MatrixFactorization:
    plus: MatrixLoop
    indices: tuple
    minus: MatrixLoop
    residual: float = float("nan")
    margins: dict = field(default_factory=dict)
    method: str = ""

    @property
    def D(self) -> MatrixLoop:
        return MatrixLoop.monomial_diag(self.indices)

    def reconstruct(self) -> MatrixLoop:
        return self.plus @ self.D @ self.minus


def _grid_size(*loops, minimum=256):
    width = sum(f.width for f in loops) + 1
    return max(minimum, 1 << (4 * width - 1).bit_length())


def det_loop(g: MatrixLoop):
    """Determinant as a Laurent series (exact: pointwise determinants on a fine enough grid)."""
    n = g.n
    band = (n * g.kmin, n * g.kmax)
    N = max(8, 1 << (2 * (band[1] - band[0] + 1)).bit_length())
    return from_samples(np.linalg.det(samples(g, N)), band)


def total_index(g: MatrixLoop) -> int:
    """Winding number of ``det g``; equals the sum of the partial indices."""
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"g is not invertible on the circle (margin {check.margin:.3e})", check.margin)
    return winding_number(det_loop(g))


def index_tuples(total: int, n: int, bound: int, order="balanced"):
    """Non-increasing integer ``n``-tuples with entries in ``[-bound, bound]`` summing to ``total``.

    ``order="balanced"`` lists the smallest spread ``k_1 - k_n`` first (ties
    broken lexicographically decreasing); ``"spread-desc"`` is the reverse;
    a callable is used as a sort key.
    """

    def rec(prefix, remaining, hi, left):
        if left == 0:
            if remaining == 0:
                yield tuple(prefix)
            return
        for k in range(hi, -bound - 1, -1):
            # the remaining entries are all <= k and >= -bound
            if remaining - k > (left - 1) * k or remaining - k < (left - 1) * -bound:
                continue
            yield from rec(prefix + [k], remaining - k, k, left - 1)

    tuples = list(rec([], total, bound, n))
    if callable(order):
        return sorted(tuples, key=order)
    balanced = sorted(tuples, key=lambda t: (t[0] - t[-1], tuple(-k for k in t)))
    if order == "balanced":
        return balanced
    if order == "spread-desc":
        return balanced[::-1]
    raise InvalidArgumentError(f"unknown enumeration order {order!r}")


def _block_starts(indices):
    starts = []
    for j, k in enumerate(indices):
        starts.append(j if j == 0 or indices[j - 1] != k else starts[-1])
    return starts


class _Section:
    """Block-Toeplitz finite section of ``u -> u g`` for row polynomials of degree <= K."""

    def __init__(self, g: MatrixLoop, K: int):
        n, a, b = g.n, g.kmin, g.kmax
        self.g, self.K, self.n, self.a = g, K, n, a
        self.m_hi = K + b
        T = np.zeros(((K + 1) * n, (self.m_hi - a + 1) * n), dtype=complex)
        for l in range(K + 1):
            # exponents m = l + a .. l + b receive u_l g_{m-l}
            col = l * n
            T[l * n : (l + 1) * n, col : col + (b - a + 1) * n] = np.concatenate(list(g.coeffs), axis=1)
        self.T = T

    def cols(self, m_lo, m_hi):
        lo, hi = max(m_lo, self.a), min(m_hi, self.m_hi)
        if lo > hi:
            return np.zeros(0, dtype=int)
        return np.arange((lo - self.a) * self.n, (hi - self.a + 1) * self.n)

    def solve_rows(self, indices):
        """Least-squares rows ``u_j``; returns ``(U coefficients, worst relative residual, rcond)``."""
        n = self.n
        starts = _block_starts(indices)
        U = np.zeros((self.K + 1, n, n), dtype=complex)
        worst, rcond = 0.0, np.inf
        for j, kj in enumerate(indices):
            if not self.a <= kj <= self.m_hi:
                return None, 1.0, 0.0
            vanish = self.cols(kj + 1, self.m_hi)
            norm_cols = (kj - self.a) * n + np.arange(starts[j], n)
            A = self.T[:, np.concatenate([vanish, norm_cols])]
            rhs = np.zeros(A.shape[1], dtype=complex)
            rhs[len(vanish) + (j - starts[j])] = 1.0
            u, _, rank, sv = np.linalg.lstsq(A.T, rhs, rcond=None)
            res = np.linalg.norm(A.T @ u - rhs)
            worst = max(worst, float(res))
            if sv.size:
                rcond = min(rcond, float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0)
            if worst > QUICK_REJECT:
                return None, worst, rcond
            U[:, j, :] = u.reshape(self.K + 1, n)
        return U, worst, rcond


def _assemble(g, indices, U):
    """``A_plus = P+(U^{-1})`` and ``A_minus`` rows ``z^{-k_j} P_{<=k_j}(u_j g)``."""
    n = g.n
    Uloop = MatrixLoop(U, 0)
    W = Uloop @ g
    lo = min(W.kmin - k for k in indices)
    V = np.zeros((1 - lo, n, n), dtype=complex)
    for j, k in enumerate(indices):
        row = W.padded(lo + k, k)[:, j, :]
        V[:, j, :] = row
    if len(set(indices)) == 1:
        # single index block: rescale so that A_minus(inf) is exactly the identity
        T = V[-1].copy()
        Tinv = np.linalg.inv(T)
        V = np.einsum("ab,kbc->kac", Tinv, V)
        V[-1] = np.eye(n)
        Uloop = MatrixLoop(np.einsum("ab,kbc->kac", Tinv, U), 0)
    minus = MatrixLoop(V, lo)
    plus = project_plus(invert(Uloop))
    return plus, minus


def _sup_residual(g, plus, indices, minus, N=None):
    D = MatrixLoop.monomial_diag(indices)
    N = N or _grid_size(g, plus, D, minus)
    diff = samples(plus, N) @ samples(D, N) @ samples(minus, N) - samples(g, N)
    per_sample = matrix_norm(diff)
    return float(per_sample.max()), per_sample


def _mixer(n):
    """Fixed unitary used to put ``A_minus(inf)`` in general position."""
    rng = np.random.default_rng(20240611 + n)
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _attempt(g, indices, tol, K0=None):
    """Try to realise ``indices``; returns ``(factorization or None, diagnostics)``.

    The row normalization needs the trailing blocks of ``A_minus(inf)`` to be
    nonsingular.  If the direct attempt fails, ``g Q`` is factored instead for
    a fixed unitary ``Q`` and ``Q`` is moved back into the minus factor.
    """
    fact, diag = _attempt_once(g, indices, tol, K0)
    if fact is not None or g.n == 1:
        return fact, diag
    Q = _mixer(g.n)
    mixed, diag2 = _attempt_once(g @ MatrixLoop.constant(Q), indices, tol, K0)
    for key in diag:
        diag[key] += diag2[key]
    if mixed is None:
        return None, diag
    plus, minus = mixed.plus, mixed.minus @ MatrixLoop.constant(Q.conj().T)
    if len(set(indices)) == 1:
        T = minus.coefficient(0)
        plus, minus = plus @ MatrixLoop.constant(T), MatrixLoop.constant(np.linalg.inv(T)) @ minus
    residual, _ = _sup_residual(g, plus, indices, minus)
    margins = {"plus_disk": disk_margin(plus), "minus_exterior": exterior_margin(minus)}
    if residual > tol or min(margins.values()) <= INVERTIBILITY_FLOOR:
        return None, diag
    return MatrixFactorization(plus, tuple(indices), minus, residual, margins, "toeplitz-mixed"), diag


def _attempt_once(g, indices, tol, K0=None):
    n = g.n
    K = K0 or n * g.width + 4
    prev = None
    diag = {"rcond": [], "ls_residual": [], "K": []}
    while True:
        section = _Section(g, K)
        U, ls_res, rcond = section.solve_rows(indices)
        diag["rcond"].append(rcond)
        diag["ls_residual"].append(ls_res)
        diag["K"].append(K)
        if U is not None:
            try:
                plus, minus = _assemble(g, indices, U)
            except (NumericError, NotInvertibleError, ArithmeticError):
                plus = None
            if plus is not None:
                residual, _ = _sup_residual(g, plus, indices, minus)
                margins = {"plus_disk": disk_margin(plus), "minus_exterior": exterior_margin(minus)}
                if (
                    residual <= tol
                    and margins["plus_disk"] > INVERTIBILITY_FLOOR
                    and margins["minus_exterior"] > INVERTIBILITY_FLOOR
                ):
                    return MatrixFactorization(plus, tuple(indices), minus, residual, margins, "toeplitz"), diag
        if U is None or K * 2 > K_CAP:
            return None, diag
        if prev is not None and ls_res > 0.5 * prev:
            return None, diag
        prev = ls_res
        K *= 2


def _require_invertible(g):
    check = is_invertible_on_circle(g)
    if not check:
        raise NotInvertibleError(f"g is not invertible on the circle (margin {check.margin:.3e})", check.margin)


def canonical_factorize(g: MatrixLoop, tol: float = RESIDUAL_TOL) -> MatrixFactorization:
    """Factorization with all partial indices zero, ``A_minus(inf) = I``.

    Raises :class:`IndexObstructionError` when no canonical factorization is
    found, which means some partial index is (likely) nonzero.
    """
    _require_invertible(g)
    total = total_index(g)
    if total != 0:
        raise IndexObstructionError(f"nonzero partial indices: total index is {total}")
    fact, diag = _attempt(g, (0,) * g.n, tol)
    if fact is None:
        rc = diag["rcond"]
        hint = " (finite sections persistently ill-conditioned)" if len(rc) >= 2 and max(rc[-2:]) < RCOND_OBSTRUCTION else ""
        raise IndexObstructionError(
            f"no canonical factorization; nonzero partial indices likely{hint}",
            residual=diag["ls_residual"][-1],
        )
    return fact


def _search(g, bound, order, tol):
    _require_invertible(g)
    if bound is None:
        bound = max(abs(g.kmin), abs(g.kmax))
    total = total_index(g)
    for indices in index_tuples(total, g.n, bound, order):
        fact, _ = _attempt(g, indices, tol)
        if fact is not None:
            return fact
    raise NumericError(f"no index tuple within bound {bound} succeeded; raise bound or truncation budget")


def partial_indices(g: MatrixLoop, bound: int | None = None, order="balanced", tol: float = RESIDUAL_TOL) -> tuple:
    """The partial indices ``(k_1 >= ... >= k_n)`` of ``g``.

    Candidate tuples with the right sum (the total index) are tried in the
    given ``order`` until one admits a factorization with residual <= ``tol``.
    """
    return _search(g, bound, order, tol).indices


def full_factorize(g: MatrixLoop, bound: int | None = None, order="balanced", tol: float = RESIDUAL_TOL) -> MatrixFactorization:
    fact = _search(g, bound, order, tol)
    report = verify_factorization(g, fact, tol=tol)
    if not report.passed:
        raise NumericError(f"factorization failed verification: {report.failures()}", residual=report.residual)
    return fact


@dataclass
class VerificationReport:
    residual: float
    tol: float
    plus_membership: bool
    minus_membership: bool
    plus_disk_margin: float
    minus_exterior_margin: float
    minus_at_infinity: np.ndarray
    normalized: bool
    index_sum_ok: bool
    per_sample: np.ndarray = field(repr=False, default=None)

    @property
    def checks(self) -> dict:
        return {
            "residual": self.residual <= self.tol,
            "plus_membership": self.plus_membership,
            "minus_membership": self.minus_membership,
            "plus_invertible_on_disk": self.plus_disk_margin > INVERTIBILITY_FLOOR,
            "minus_invertible_outside": self.minus_exterior_margin > INVERTIBILITY_FLOOR,
            "index_sum": self.index_sum_ok,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self):
        return [k for k, ok in self.checks.items() if not ok]


def _normalized(c0, indices, tol):
    starts = _block_starts(indices)
    n = len(indices)
    for j in range(n):
        for i in range(starts[j], n):
            if abs(c0[j, i] - (1.0 if i == j else 0.0)) > tol:
                return False
    return True


def verify_factorization(g: MatrixLoop, fact: MatrixFactorization, samples_: int = 256, tol: float = RESIDUAL_TOL):
    """Residual certificate for ``g = plus D minus`` plus membership, margin and normalization checks.

    ``normalized`` (minus(inf) unit lower triangular with identity blocks on
    repeated indices) is reported but not required: another factorization
    with the same indices differs by an admissible coupling.
    """
    N = max(samples_, _grid_size(g, fact.plus, fact.D, fact.minus, minimum=samples_))
    residual, per_sample = _sup_residual(g, fact.plus, fact.indices, fact.minus, N)
    c0 = fact.minus.coefficient(0)
    try:
        index_sum_ok = sum(fact.indices) == total_index(g)
    except (NotInvertibleError, NumericError):
        index_sum_ok = False
    return VerificationReport(
        residual=residual,
        tol=tol,
        plus_membership=fact.plus.kmin >= 0 or fact.plus.is_zero(),
        minus_membership=fact.minus.kmax <= 0 or fact.minus.is_zero(),
        plus_disk_margin=disk_margin(fact.plus),
        minus_exterior_margin=exterior_margin(fact.minus),
        minus_at_infinity=np.asarray(c0),
        normalized=_normalized(c0, fact.indices, tol),
        index_sum_ok=index_sum_ok,
        per_sample=per_sample,
    )


def check_coupling_structure(C: MatrixLoop, indices, tol: float = RESIDUAL_TOL) -> bool:
    """Entry ``c_kj`` vanishes if ``k_k < k_j``, is constant if equal, and is a
    polynomial of degree ``<= k_k - k_j`` otherwise."""
    n = len(indices)
    for k in range(n):
        for j in range(n):
            gap = indices[k] - indices[j]
            entry = C.coeffs[:, k, j]
            exps = np.arange(C.kmin, C.kmax + 1)
            allowed = (exps >= 0) & (exps <= gap) if gap >= 0 else np.zeros_like(exps, dtype=bool)
            if np.any(np.abs(entry[~allowed]) > tol):
                return False
    return True


@dataclass
class CouplingResult:
    C: MatrixLoop
    structure_ok: bool
    entries_ok: bool
    minus_relation_residual: float

    def __iter__(self):
        return iter((self.C, self.structure_ok))


def coupling_matrix(fact1: MatrixFactorization, fact2: MatrixFactorization, tol: float = RESIDUAL_TOL) -> CouplingResult:
    """Coupling ``C = plus1^{-1} plus2`` between two factorizations of one loop.

    ``structure_ok`` requires the entry pattern of
    :func:`check_coupling_structure` and ``minus2 = D^{-1} C^{-1} D minus1``.
    """
    if tuple(fact1.indices) != tuple(fact2.indices):
        raise InvariantViolation(
            f"factorizations with different partial indices {fact1.indices} != {fact2.indices}"
        )
    indices = tuple(fact1.indices)
    C = invert(fact1.plus) @ fact2.plus
    entries_ok = check_coupling_structure(C, indices, tol)
    D = MatrixLoop.monomial_diag(indices)
    Dinv = MatrixLoop.monomial_diag([-k for k in indices])
    predicted = Dinv @ invert(C) @ D @ fact1.minus
    rel = wiener_distance(predicted, fact2.minus)
    return CouplingResult(C, entries_ok and rel <= tol, entries_ok, rel)
