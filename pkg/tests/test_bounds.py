import math

import numpy as np
import pytest

from matmart.bounds import (
    BernsteinParams,
    bernstein_rhs,
    generic_exponential_bound,
    lambda_cap,
    martingale_matrix_bound,
    matrix_bernstein_indep_bound,
    optimal_t,
    scalar_bernstein_bound,
    scalar_lambda,
    scalar_martingale_bound,
)
from matmart.errors import NotPositiveDefiniteError, ParameterError
from matmart.symmat import SymMat, lambda_max, psd_order_leq


class TestLambdaCap:
    def test_zero_maps_to_zero(self):
        out = lambda_cap(SymMat.zeros(3), 0.5, 1.0)
        np.testing.assert_array_equal(out.entries, np.zeros((3, 3)))

    def test_scalar_case(self):
        # 0.25 * 4 / (2 * 0.5) = 1, so the value is ln 2
        out = lambda_cap(SymMat.diag([4.0]), 0.5, 1.0)
        assert out.entries[0, 0] == pytest.approx(math.log(2.0), abs=1e-15)

    def test_diagonal_per_eigenvalue(self):
        out = lambda_cap(SymMat.diag([2.0, 0.0]), 0.5, 1.0)
        np.testing.assert_allclose(
            out.entries, np.diag([math.log(1.5), 0.0]), atol=1e-15)

    def test_rejects_bad_tilt(self):
        x = SymMat.identity(2)
        with pytest.raises(ParameterError):
            lambda_cap(x, 2.0, 1.0)   # ct = 2
        with pytest.raises(ParameterError):
            lambda_cap(x, -0.5, 1.0)  # t <= 0

    def test_rejects_non_psd(self):
        with pytest.raises(NotPositiveDefiniteError):
            lambda_cap(SymMat.diag([1.0, -0.5]), 0.5, 1.0)

    def test_commutes_with_diagonalization(self):
        rs = np.random.default_rng(31)
        for _ in range(50):
            d = int(rs.integers(1, 6))
            q = np.linalg.qr(rs.normal(size=(d, d)))[0]
            ev = rs.uniform(0.0, 4.0, size=d)
            x = SymMat(q @ np.diag(ev) @ q.T)
            t, c = 0.4, 1.2
            direct = lambda_cap(x, t, c).entries
            conjugated = q @ lambda_cap(SymMat.diag(ev), t, c).entries @ q.T
            assert np.abs(direct - conjugated).max() <= 1e-10

    def test_monotone_on_commuting_pairs(self):
        rs = np.random.default_rng(37)
        for _ in range(100):
            d = int(rs.integers(1, 6))
            ev1 = rs.uniform(0.0, 3.0, size=d)
            ev2 = ev1 + rs.uniform(0.0, 2.0, size=d)
            x1, x2 = SymMat.diag(ev1), SymMat.diag(ev2)
            assert psd_order_leq(lambda_cap(x1, 0.3, 1.0), lambda_cap(x2, 0.3, 1.0))


class TestScalarLambda:
    def test_zero(self):
        assert scalar_lambda(0.0, 0.5, 1.0) == 0.0

    def test_matches_lambda_cap_arithmetic(self):
        assert scalar_lambda(4.0, 0.5, 1.0) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_definitional_identity(self):
        for y in (0.3, 1.0, 4.7):
            for t, c in ((0.5, 1.0), (0.2, 3.0), (0.9, 0.7)):
                via_matrix = lambda_max(lambda_cap(SymMat.diag([y]), t, c))
                assert abs(scalar_lambda(y, t, c) - via_matrix) <= 1e-12

    def test_rejects_negative_y(self):
        with pytest.raises(ParameterError):
            scalar_lambda(-1.0, 0.5, 1.0)


class TestOptimalT:
    def test_arithmetic(self):
        assert optimal_t(1.0, 1.0, 1.0) == 0.5
        assert optimal_t(1.0, 3.0, 2.0) == pytest.approx(0.2)
        assert 2.0 * optimal_t(1.0, 3.0, 2.0) == pytest.approx(0.4)

    def test_always_admissible(self):
        rs = np.random.default_rng(41)
        x, y, c = (rs.uniform(1e-3, 10.0, size=(3, 1000)))
        t = x / (y + c * x)
        assert np.all(c * t < 1.0) and np.all(t > 0.0)

    def test_monotone_vanishing_in_y(self):
        ts = [optimal_t(1.0, y, 1.0) for y in (1.0, 10.0, 100.0, 1000.0)]
        assert all(a > b for a, b in zip(ts, ts[1:]))
        assert ts[-1] < 1e-2

    def test_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            optimal_t(0.0, 1.0, 1.0)


class TestMartingaleBounds:
    def test_hand_computed_example(self):
        report = martingale_matrix_bound(BernsteinParams(x=1.0, y=1.0, c=1.0, n=1, d=2))
        assert report.bound_product_form == pytest.approx(2.0 * 1.25 * math.exp(-0.5), rel=1e-13)
        assert report.bound_exp_form == pytest.approx(2.0 * math.exp(-0.25), rel=1e-13)
        assert report.t_used == 0.5

    def test_d1_equals_scalar_bound(self):
        for x, y, c, n in ((1.0, 1.0, 1.0, 1), (0.7, 2.0, 1.5, 9), (3.0, 0.4, 0.3, 25)):
            report = martingale_matrix_bound(BernsteinParams(x=x, y=y, c=c, n=n, d=1))
            prod, expf = scalar_martingale_bound(x, y, c, n)
            assert report.bound_product_form == pytest.approx(prod, rel=1e-14)
            assert report.bound_exp_form == pytest.approx(expf, rel=1e-14)

    def test_zero_deviation_limit(self):
        report = martingale_matrix_bound(BernsteinParams(x=1e-9, y=1.0, c=1.0, n=5, d=3))
        assert report.bound_product_form == pytest.approx(3.0, rel=1e-8)
        assert report.bound_exp_form == pytest.approx(3.0, rel=1e-8)

    def test_explicit_tilt_validation(self):
        params = BernsteinParams(x=1.0, y=1.0, c=1.0, n=1, d=1)
        with pytest.raises(ParameterError):
            martingale_matrix_bound(params, t=1.5)

    def test_params_validation(self):
        with pytest.raises(ParameterError):
            BernsteinParams(x=-1.0, y=1.0, c=1.0, n=1, d=1)
        with pytest.raises(ParameterError):
            BernsteinParams(x=1.0, y=1.0, c=1.0, n=0, d=1)
        with pytest.raises(ParameterError):
            BernsteinParams(x=1.0, y=1.0, c=2.0, n=1, d=1, t=0.5)  # ct = 1

    def test_default_tilt_is_optimal(self):
        p = BernsteinParams(x=2.0, y=0.5, c=1.5, n=3, d=2)
        assert p.t == optimal_t(2.0, 0.5, 1.5)


class TestScalarMartingaleBound:
    def test_example(self):
        prod, expf = scalar_martingale_bound(1.0, 1.0, 1.0, 1)
        assert prod == pytest.approx(1.25 * math.exp(-0.5), rel=1e-14)
        assert expf == pytest.approx(math.exp(-0.25), rel=1e-14)

    def test_nth_power_structure(self):
        p1, e1 = scalar_martingale_bound(0.8, 1.3, 0.9, 1)
        p2, e2 = scalar_martingale_bound(0.8, 1.3, 0.9, 2)
        assert math.log(p2) == pytest.approx(2.0 * math.log(p1), rel=1e-12)
        assert math.log(e2) == pytest.approx(2.0 * math.log(e1), rel=1e-12)

    def test_first_below_second(self):
        rs = np.random.default_rng(43)
        for _ in range(200):
            x, y, c = rs.uniform(0.05, 8.0, size=3)
            n = int(rs.integers(1, 40))
            prod, expf = scalar_martingale_bound(x, y, c, n)
            assert prod <= expf * (1.0 + 1e-12)


class TestScalarBernstein:
    def test_example(self):
        assert scalar_bernstein_bound(1.0, 1.0, 1.0, 1) == pytest.approx(math.exp(-0.25))

    def test_limit_at_zero_deviation(self):
        assert scalar_bernstein_bound(1e-12, 1.0, 1.0, 4) == pytest.approx(1.0)

    def test_monotone_decreasing_in_x(self):
        # numeric-derivative oracle on a grid
        xs = np.linspace(0.05, 6.0, 200)
        vals = np.array([scalar_bernstein_bound(x, 1.3, 0.7, 9) for x in xs])
        assert np.all(np.diff(vals) < 0.0)
        h = 1e-6
        for x in (0.5, 2.0, 5.0):
            deriv = (scalar_bernstein_bound(x + h, 1.3, 0.7, 9)
                     - scalar_bernstein_bound(x - h, 1.3, 0.7, 9)) / (2 * h)
            assert deriv < 0.0

    def test_rejects_nonpositive_x(self):
        with pytest.raises(ParameterError):
            scalar_bernstein_bound(0.0, 1.0, 1.0, 1)


class TestMatrixIndepBound:
    def test_at_zero_threshold(self):
        assert matrix_bernstein_indep_bound(0.0, 1.0, 1.0, 7) == 7.0

    def test_example(self):
        assert matrix_bernstein_indep_bound(1.0, 1.0, 3.0, 1) == pytest.approx(math.exp(-0.25))

    def test_nonincreasing_grid(self):
        ts = np.linspace(0.0, 10.0, 300)
        vals = np.array([matrix_bernstein_indep_bound(t, 2.0, 1.5, 4) for t in ts])
        assert np.all(np.diff(vals) <= 0.0)

    def test_rejects_negative_t(self):
        with pytest.raises(ParameterError):
            matrix_bernstein_indep_bound(-0.5, 1.0, 1.0, 1)


class TestBernsteinRhs:
    def test_p2_is_identity_coefficient(self):
        v = SymMat([[1.0, 0.2], [0.2, 0.7]])
        np.testing.assert_array_equal(bernstein_rhs(v, 2, 5.0).entries, v.entries)

    def test_p3(self):
        v = SymMat.identity(2)
        np.testing.assert_allclose(bernstein_rhs(v, 3, 2.0).entries, 6.0 * np.eye(2))

    def test_p4(self):
        np.testing.assert_allclose(
            bernstein_rhs(SymMat.identity(3), 4, 1.0).entries, 12.0 * np.eye(3))

    def test_rejects_small_p(self):
        with pytest.raises(ParameterError):
            bernstein_rhs(SymMat.identity(2), 1, 1.0)


class TestAlgebraicIdentities:
    def test_chain_inequality_random_sweep(self):
        rs = np.random.default_rng(47)
        x, y, c = rs.uniform(1e-3, 10.0, size=(3, 2000))
        n = rs.integers(1, 51, size=2000)
        u = x * x / (2.0 * (y + c * x))
        log_prod = n * (np.log1p(u) - 2.0 * u)
        log_exp = -n * u
        assert np.all(log_prod <= log_exp + 1e-12)

    def test_optimal_tilt_identity(self):
        rs = np.random.default_rng(53)
        for _ in range(500):
            x, y, c = rs.uniform(1e-2, 10.0, size=3)
            n = int(rs.integers(1, 51))
            d = int(rs.integers(1, 11))
            t_star = optimal_t(x, y, c)
            generic = generic_exponential_bound(x, y, c, n, d, t_star)
            product = martingale_matrix_bound(
                BernsteinParams(x=x, y=y, c=c, n=n, d=d)).bound_product_form
            assert generic == pytest.approx(product, rel=1e-12)

    def test_generic_bound_minimized_at_optimal_t(self):
        x, y, c, n, d = 1.3, 0.8, 1.1, 7, 3
        t_star = optimal_t(x, y, c)
        best = generic_exponential_bound(x, y, c, n, d, t_star)
        for t in (0.25 * t_star, 0.6 * t_star, 1.3 * t_star):
            if 0 < c * t < 1:
                assert generic_exponential_bound(x, y, c, n, d, t) >= best * (1 - 1e-12)
