import numpy as np
import pytest

from birkhoff import (
    InvalidArgumentError,
    LaurentSeries,
    TruncationError,
    NotInvertibleError,
    exp_loop,
    factor_laurent_poly,
    monomial,
    scalar_factorize,
    shift,
    wiener_distance,
    winding_number,
)

from _corpus import laurent_poly_off_circle, random_series, scaled


def root_count_index(g):
    """Argument-principle oracle: kmin plus the number of roots inside the disk."""
    roots = np.roots(g.coeffs[::-1]) if g.width else np.zeros(0)
    return g.kmin + int(np.sum(np.abs(roots) < 1))


class TestWinding:
    def test_monomial(self):
        assert winding_number(monomial(5)) == 5
        assert winding_number(monomial(-3)) == -3

    def test_linear(self):
        assert winding_number(LaurentSeries([-0.5, 1])) == 1
        assert winding_number(LaurentSeries([-2, 1])) == 0

    def test_exp_image_has_index_zero(self):
        assert winding_number(exp_loop(LaurentSeries([1, 0, 1], kmin=-1))) == 0

    def test_not_invertible(self):
        with pytest.raises(NotInvertibleError):
            winding_number(LaurentSeries([1, -1]))

    def test_explicit_grid_too_small(self):
        with pytest.raises(InvalidArgumentError):
            winding_number(LaurentSeries(np.ones(5) * [3, 0, 0, 0, 1]), N=16)

    def test_matches_root_count(self):
        rng = np.random.default_rng(20)
        for _ in range(40):
            n_in, n_out = rng.integers(0, 5, 2)
            g, _ = laurent_poly_off_circle(rng, int(n_in), int(n_out), int(rng.integers(-4, 4)))
            assert winding_number(g) == root_count_index(g)

    def test_additive(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            f, _ = laurent_poly_off_circle(rng, 2, 1, -1)
            g, _ = laurent_poly_off_circle(rng, 1, 3, 0)
            assert winding_number(f * g) == winding_number(f) + winding_number(g)


class TestRootFactorization:
    def test_constant(self):
        fact = factor_laurent_poly(LaurentSeries([2.5 - 1j]))
        assert fact.kappa == 0
        assert fact.plus == LaurentSeries([2.5 - 1j])
        assert fact.minus == LaurentSeries([1.0])

    def test_root_outside(self):
        fact = factor_laurent_poly(LaurentSeries([-2.0, 1.0]))
        assert fact.kappa == 0
        assert wiener_distance(fact.plus, LaurentSeries([-2.0, 1.0])) < 1e-15
        assert fact.minus == LaurentSeries([1.0])

    def test_both_roots_inside(self):
        # 6z^2 - 5z + 1 = 6 z^2 (1 - 1/(2z)) (1 - 1/(3z))
        fact = factor_laurent_poly(LaurentSeries([1.0, -5.0, 6.0]))
        assert fact.kappa == 2
        assert wiener_distance(fact.plus, LaurentSeries([6.0])) < 1e-14
        expected = LaurentSeries([1 / 6, -5 / 6, 1.0], kmin=-2)
        assert wiener_distance(fact.minus, expected) < 1e-14
        assert fact.residual < 1e-14

    def test_root_on_circle(self):
        with pytest.raises(NotInvertibleError):
            factor_laurent_poly(LaurentSeries([1.0, 0.0, -1.0]))

    def test_membership_and_normalization(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            g, _ = laurent_poly_off_circle(rng, 2, 2, -2)
            fact = factor_laurent_poly(g)
            assert fact.plus.kmin >= 0
            assert fact.minus.kmax <= 0
            assert fact.minus.coefficient(0) == 1
            assert fact.plus_margin > 0 and fact.minus_margin > 0
            assert fact.residual < 1e-12


class TestScalarFactorize:
    def test_one(self):
        fact = scalar_factorize(LaurentSeries([1.0]))
        assert fact.kappa == 0
        assert wiener_distance(fact.plus, LaurentSeries([1.0])) < 1e-15
        assert wiener_distance(fact.minus, LaurentSeries([1.0])) < 1e-15

    def test_routes_agree_on_linear(self):
        g = LaurentSeries([-2.0, 1.0])
        a = scalar_factorize(g, method="exp-log")
        b = factor_laurent_poly(g)
        assert a.kappa == b.kappa == 0
        assert wiener_distance(a.plus, b.plus) < 1e-9
        assert wiener_distance(a.minus, b.minus) < 1e-9

    def test_commuting_split(self):
        x = LaurentSeries([0.1, 0.0, 0.2], kmin=-1)
        fact = scalar_factorize(exp_loop(x), method="exp-log")
        assert fact.kappa == 0
        assert wiener_distance(fact.plus, exp_loop(monomial(1, 0.2))) < 1e-12
        assert wiener_distance(fact.minus, exp_loop(monomial(-1, 0.1))) < 1e-12

    def test_winding_removed(self):
        rng = np.random.default_rng(23)
        for k in (-4, -1, 0, 2, 5):
            h = scaled(random_series(rng, (-3, 3)), 0.5)
            g = shift(exp_loop(h), k)
            fact = scalar_factorize(g)
            assert fact.kappa == k == winding_number(g)
            assert wiener_distance(g, fact.reconstruct()) <= 1e-8
            assert fact.minus.coefficient(0) == 1

    def test_unknown_method(self):
        with pytest.raises(InvalidArgumentError):
            scalar_factorize(LaurentSeries([1.0]), method="newton")

    def test_not_invertible(self):
        with pytest.raises(NotInvertibleError):
            scalar_factorize(LaurentSeries([1.0, -1.0]))

    def test_routes_agree_on_polynomials(self):
        rng = np.random.default_rng(24)
        for _ in range(15):
            g, _ = laurent_poly_off_circle(rng, 2, 2, -1, gap=0.1)
            a = scalar_factorize(g, method="exp-log")
            b = factor_laurent_poly(g)
            assert a.kappa == b.kappa
            assert wiener_distance(a.plus, b.plus) <= 1e-8
            assert wiener_distance(a.minus, b.minus) <= 1e-8

    def test_exp_route_fails_loudly_near_circle(self):
        # log coefficients decay like 0.995**k, far past the band cap
        g = LaurentSeries([-0.995, 1.0])
        with pytest.raises(TruncationError):
            scalar_factorize(g, method="exp-log")
        assert factor_laurent_poly(g).kappa == 1
