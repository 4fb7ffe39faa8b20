import numpy as np
import pytest
import scipy.linalg

from birkhoff import (
    DomainError,
    InvalidArgumentError,
    LieAlgebraRep,
    LoopAlgebraElement,
    MatrixLoop,
    bch_components,
    bch_multiply,
    bch_remainder,
    canonical_factorize,
    exp_loop,
    group_factorize_local,
    lipschitz_estimate,
    pointwise_expm,
    samples,
    split_remainder,
    split_solve,
)

from _corpus import cgauss, random_sl2

E = np.array([[0, 1], [0, 0]], dtype=complex)
F = np.array([[0, 0], [1, 0]], dtype=complex)
H = np.array([[1, 0], [0, -1]], dtype=complex)


def const_element(rep, m, k=0):
    return LoopAlgebraElement(rep, MatrixLoop(np.asarray(m)[None], k))


class TestLieAlgebraRep:
    def test_sl2_structure_constants(self):
        rep = LieAlgebraRep.sl2()
        # [E, F] = H, [H, E] = 2E, [H, F] = -2F
        assert np.allclose(rep.structure_constants[0, 1], [0, 0, 1])
        assert np.allclose(rep.structure_constants[2, 0], [2, 0, 0])
        assert np.allclose(rep.structure_constants[2, 1], [0, -2, 0])

    def test_dimensions(self):
        assert LieAlgebraRep.gl(3).dim == 9
        assert LieAlgebraRep.sl(3).dim == 8
        assert LieAlgebraRep.strictly_upper(3).dim == 3
        assert LieAlgebraRep.abelian(2).dim == 1

    def test_rejects_dependent_basis(self):
        with pytest.raises(InvalidArgumentError):
            LieAlgebraRep([E, 2 * E])

    def test_rejects_non_closed_basis(self):
        with pytest.raises(InvalidArgumentError):
            LieAlgebraRep([E, F])

    def test_coordinates_round_trip(self):
        rep = LieAlgebraRep.sl(3)
        rng = np.random.default_rng(30)
        c = cgauss(rng, (4, rep.dim))
        assert np.allclose(rep.coordinates(rep.from_coordinates(c)), c)


class TestLoopAlgebraElement:
    def test_membership_enforced(self):
        with pytest.raises(DomainError):
            LoopAlgebraElement(LieAlgebraRep.sl2(), MatrixLoop(np.eye(2)[None]))

    def test_dimension_enforced(self):
        with pytest.raises(InvalidArgumentError):
            LoopAlgebraElement(LieAlgebraRep.sl2(), MatrixLoop(np.zeros((1, 3, 3))))

    def test_bracket_is_loop_commutator(self):
        rep = LieAlgebraRep.sl2()
        x = const_element(rep, E, 1)
        y = const_element(rep, F, -1)
        z = x.bracket(y)
        assert z.series == MatrixLoop(H[None], 0)

    def test_split_parts(self):
        rng = np.random.default_rng(31)
        x = random_sl2(rng)
        assert x.plus_part().series.kmin >= 0
        assert x.ominus_part().series.kmax <= -1
        assert (x.plus_part() + x.ominus_part()).series == x.series


class TestBCH:
    def test_commuting_is_sum(self):
        rep = LieAlgebraRep.sl2()
        x = const_element(rep, 0.03 * H, 1)
        y = const_element(rep, -0.02 * H, -2)
        for order in (1, 4, 8):
            assert bch_multiply(x, y, order).series == (x + y).series

    def test_zero_right_factor(self):
        rng = np.random.default_rng(32)
        x = random_sl2(rng)
        assert bch_multiply(x, LoopAlgebraElement.zero(x.rep)).series == x.series

    def test_self_remainder_vanishes(self):
        rng = np.random.default_rng(33)
        x = random_sl2(rng)
        assert bch_remainder(x, x).norm() < 1e-17

    def test_leading_dynkin_term(self):
        rep = LieAlgebraRep.sl2()
        eps = 0.05
        Z = bch_components(const_element(rep, eps * E), const_element(rep, eps * F), 2)
        assert np.allclose(Z[1].series.coeffs[0], eps**2 / 2 * H, atol=1e-18)

    def test_constant_loops_match_dense_logm(self):
        rep = LieAlgebraRep.sl2()
        x, y = const_element(rep, 0.05 * E), const_element(rep, 0.05 * F)
        z = bch_multiply(x, y, 6)
        oracle = scipy.linalg.logm(scipy.linalg.expm(0.05 * E) @ scipy.linalg.expm(0.05 * F))
        assert np.max(np.abs(z.series.coeffs[0] - oracle)) < 1e-10

    def test_dense_components(self):
        rng = np.random.default_rng(34)
        a, b = (0.05 * m / np.linalg.norm(m, 2) for m in cgauss(rng, (2, 3, 3)))
        Z = bch_components(a, b, 8, bracket=lambda p, q: p @ q - q @ p)
        lhs = scipy.linalg.expm(a) @ scipy.linalg.expm(b)
        assert np.max(np.abs(scipy.linalg.expm(sum(Z)) - lhs)) < 1e-13

    def test_loops_match_exp_oracle(self):
        rng = np.random.default_rng(35)
        for _ in range(10):
            x, y = random_sl2(rng, norm=0.05), random_sl2(rng, norm=0.05)
            z = bch_multiply(x, y, 6)
            lhs = pointwise_expm(x.series) @ pointwise_expm(y.series)
            assert np.max(np.abs(lhs - pointwise_expm(z.series))) < 1e-10

    def test_nilpotent_exact_at_order_two(self):
        rep = LieAlgebraRep.strictly_upper(3)
        rng = np.random.default_rng(36)
        c = lambda: LoopAlgebraElement.from_coordinates(rep, cgauss(rng, (3, 3)) * 0.02, -1)  # noqa: E731
        x, y = c(), c()
        z = bch_multiply(x, y, 2, radius=1.0)
        lhs = pointwise_expm(x.series) @ pointwise_expm(y.series)
        assert np.max(np.abs(lhs - pointwise_expm(z.series))) < 1e-13

    def test_ball_enforced(self):
        rep = LieAlgebraRep.sl2()
        with pytest.raises(DomainError):
            bch_multiply(const_element(rep, 0.2 * E), const_element(rep, 0.01 * F))

    def test_order_range(self):
        rep = LieAlgebraRep.sl2()
        x = const_element(rep, 0.01 * E)
        with pytest.raises(InvalidArgumentError):
            bch_multiply(x, x, 9)


class TestLipschitz:
    def test_identity(self):
        rep = LieAlgebraRep.sl2()
        lip = lipschitz_estimate(lambda v: v, LoopAlgebraElement.zero(rep), 0.1)
        assert 1 - 1e-9 <= lip <= 1 + 1e-12

    def test_doubling(self):
        rep = LieAlgebraRep.sl2()
        lip = lipschitz_estimate(lambda v: v * 2.0, LoopAlgebraElement.zero(rep), 0.1)
        assert lip == pytest.approx(2.0, rel=1e-9)

    def test_split_remainder_on_half_ball(self):
        rep = LieAlgebraRep.sl2()
        lip = lipschitz_estimate(lambda v: split_remainder(v), LoopAlgebraElement.zero(rep), 1 / 16)
        assert lip <= 0.5

    def test_needs_samples(self):
        with pytest.raises(InvalidArgumentError):
            lipschitz_estimate(lambda v: v, LoopAlgebraElement.zero(LieAlgebraRep.sl2()), 0.1, samples=10)


class TestSplitSolve:
    def test_plus_only_is_fixed(self):
        rep = LieAlgebraRep.sl2()
        y = LoopAlgebraElement.from_coordinates(rep, np.array([[0.01, 0.0, 0.005], [0.0, 0.01, 0.0]]), 0)
        res = split_solve(y)
        assert res.x.series == y.series

    def test_abelian_is_identity_map(self):
        rep = LieAlgebraRep.abelian(2)
        y = LoopAlgebraElement.from_coordinates(rep, np.array([[0.01], [0.005], [0.01]]), -1)
        res = split_solve(y)
        assert res.x.series == y.series

    def test_exp_oracle(self):
        rng = np.random.default_rng(37)
        y = random_sl2(rng, norm=0.02)
        res = split_solve(y)
        x = res.x
        lhs = pointwise_expm(x.plus_part().series) @ pointwise_expm(x.ominus_part().series)
        assert np.max(np.abs(lhs - pointwise_expm(y.series))) < 1e-9
        assert res.contraction <= 0.5
        assert res.iterations <= 60

    def test_records_steps(self):
        rng = np.random.default_rng(38)
        res = split_solve(random_sl2(rng, norm=0.02))
        assert len(res.steps) == res.iterations

    def test_too_large(self):
        rng = np.random.default_rng(39)
        with pytest.raises(DomainError):
            split_solve(random_sl2(rng, norm=0.05))


class TestGroupFactorizeLocal:
    def test_identity(self):
        plus, minus = group_factorize_local(MatrixLoop.identity(2), LieAlgebraRep.sl2())
        assert np.allclose(plus.coeffs, np.eye(2)[None])
        assert np.allclose(minus.coeffs, np.eye(2)[None])

    def test_plus_only(self):
        a = 0.02 * (E + 0.5 * H)
        g = exp_loop(MatrixLoop(a[None], 1))
        plus, minus = group_factorize_local(g, LieAlgebraRep.sl2())
        assert np.max(np.abs(samples(plus, 64) - samples(g, 64))) < 1e-12
        assert np.max(np.abs(samples(minus, 64) - np.eye(2))) < 1e-12

    def test_matches_canonical(self):
        x = MatrixLoop(np.stack([0.02 * F, np.zeros((2, 2)), 0.02 * E]), -1)
        g = exp_loop(x)
        local = group_factorize_local(g, LieAlgebraRep.sl2(), radius=0.2)
        assert local.residual < 1e-9
        canon = canonical_factorize(g)
        assert np.max(np.abs(samples(local.plus, 256) - samples(canon.plus, 256))) < 1e-8
        assert np.max(np.abs(samples(local.minus, 256) - samples(canon.minus, 256))) < 1e-8

    def test_outside_algebra(self):
        g = exp_loop(MatrixLoop((0.01 * np.eye(2))[None], 1))
        with pytest.raises(DomainError):
            group_factorize_local(g, LieAlgebraRep.sl2())
