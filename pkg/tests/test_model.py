"""Vector fields, Jacobian, equilibria, symmetric reduction, eta rescaling."""

import numpy as np
import pytest

from mayleonard import (ModelParams, OverflowSignal, SingularMatrixError,
                        SymmetricParams, ZeroEtaError, interior_equilibrium,
                        jacobian, reduce_symmetric, rescale_to_unit_eta, rhs,
                        rhs_transformed)

ALL_ONES = np.ones((3, 3))


def params_all_ones(eta=1.0):
    return ModelParams(eta, ALL_ONES)


def random_params(rng, eta=1.0):
    a = np.ones((3, 3))
    off = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    for n, m in off:
        a[n, m] = rng.uniform(0.1, 2.0)
    return ModelParams(eta, a)


class TestModelParams:
    def test_diagonal_must_be_exactly_one(self):
        a = ALL_ONES.copy()
        a[1, 1] = 1.0 + 1e-12
        with pytest.raises(ValueError, match="diagonal"):
            ModelParams(1.0, a)

    def test_rejects_nonfinite_entries(self):
        a = ALL_ONES.copy()
        a[0, 2] = np.inf
        with pytest.raises(OverflowSignal):
            ModelParams(1.0, a)
        with pytest.raises(OverflowSignal):
            ModelParams(np.nan, ALL_ONES)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            ModelParams(1.0, np.ones((2, 3)))

    def test_matrix_is_read_only_copy(self):
        a = ALL_ONES.copy()
        p = ModelParams(1.0, a)
        a[0, 1] = 5.0
        assert p.a[0, 1] == 1.0
        with pytest.raises(ValueError):
            p.a[0, 1] = 5.0

    def test_from_couplings_layout(self):
        p = ModelParams.from_couplings(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
        expected = np.array([[1.0, 2.0, 3.0],
                             [4.0, 1.0, 5.0],
                             [6.0, 7.0, 1.0]])
        assert np.array_equal(p.a, expected)
        assert p.couplings == (2.0, 3.0, 4.0, 5.0, 6.0, 7.0)

    def test_complex_eta_gives_complex_mode(self):
        p = ModelParams(1j, ALL_ONES)
        assert p.eta == 1j

    def test_eta_rejects_bool_and_str(self):
        with pytest.raises((TypeError, ValueError)):
            ModelParams(True, ALL_ONES)
        with pytest.raises((TypeError, ValueError)):
            ModelParams("1.0", ALL_ONES)


class TestRhs:
    def test_zero_state_is_fixed_point(self):
        assert np.array_equal(rhs(params_all_ones(), np.zeros(3)), np.zeros(3))

    def test_symmetric_interior_equilibrium_is_fixed_point(self):
        x = np.full(3, 1.0 / 3.0)
        out = rhs(params_all_ones(), x)
        assert np.max(np.abs(out)) < 1e-16

    def test_all_ones_at_unit_state(self):
        out = rhs(params_all_ones(), np.ones(3))
        assert np.array_equal(out, np.full(3, -2.0))

    def test_matches_longhand_evaluation(self):
        # The field written out term by term, same subtraction order.
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = random_params(rng, eta=rng.uniform(0.5, 2.0))
            x = rng.uniform(-1.0, 1.0, size=3)
            a = p.a
            expected = np.array([
                x[0] * (p.eta - a[0, 0] * x[0] - a[0, 1] * x[1] - a[0, 2] * x[2]),
                x[1] * (p.eta - a[1, 0] * x[0] - a[1, 1] * x[1] - a[1, 2] * x[2]),
                x[2] * (p.eta - a[2, 0] * x[0] - a[2, 1] * x[1] - a[2, 2] * x[2]),
            ])
            assert np.array_equal(rhs(p, x), expected)

    def test_overflow_raises_signal(self):
        with pytest.raises(OverflowSignal):
            rhs(params_all_ones(), np.full(3, 1e200))

    def test_complex_state(self):
        p = ModelParams(1j, ALL_ONES)
        x = np.array([1.0 + 0j, 1.0, 1.0])
        out = rhs(p, x)
        assert np.allclose(out, (1j - 3.0) * np.ones(3))


class TestRhsTransformed:
    def test_zero_state(self):
        assert np.array_equal(rhs_transformed(params_all_ones(), np.zeros(3)),
                              np.zeros(3))

    def test_all_ones_at_unit_state(self):
        out = rhs_transformed(params_all_ones(), np.ones(3))
        assert np.array_equal(out, np.full(3, -3.0))

    def test_eta_does_not_appear(self):
        rng = np.random.default_rng(3)
        a = random_params(rng).a
        y = rng.uniform(0.1, 2.0, size=3)
        out1 = rhs_transformed(ModelParams(0.5, a), y)
        out2 = rhs_transformed(ModelParams(7.0, a), y)
        assert np.array_equal(out1, out2)

    def test_homogeneity_lambda_two_exact(self):
        rng = np.random.default_rng(5)
        p = random_params(rng)
        y = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(rhs_transformed(p, 2.0 * y),
                              4.0 * rhs_transformed(p, y))

    @pytest.mark.parametrize("lam", [3.0, 0.7, 1.9])
    def test_homogeneity_within_four_ulp(self, lam):
        # Population-regime states; cancellation-free so ulp bounds are sharp.
        rng = np.random.default_rng(17)
        for _ in range(200):
            p = random_params(rng)
            y = rng.uniform(0.1, 2.0, size=3)
            lhs = rhs_transformed(p, lam * y)
            ref = lam * lam * rhs_transformed(p, y)
            ulp = np.abs(lhs - ref) / np.spacing(np.abs(ref))
            assert np.max(ulp) <= 4.0


class TestJacobian:
    def test_origin_linearization(self):
        assert np.array_equal(jacobian(params_all_ones(), np.zeros(3)),
                              np.eye(3))

    def test_symmetric_equilibrium_value(self):
        x = np.full(3, 1.0 / 3.0)
        j = jacobian(params_all_ones(), x)
        assert np.allclose(j, np.full((3, 3), -1.0 / 3.0), atol=1e-15)

    def test_central_difference_agreement(self):
        # Analytic Jacobian against central differences, h=1e-5, 100 states.
        rng = np.random.default_rng(23)
        h = 1e-5
        for _ in range(100):
            p = random_params(rng, eta=rng.uniform(0.5, 2.0))
            x = rng.uniform(0.0, 1.0, size=3)
            j = jacobian(p, x)
            fd = np.empty((3, 3))
            for m in range(3):
                e = np.zeros(3)
                e[m] = h
                fd[:, m] = (rhs(p, x + e) - rhs(p, x - e)) / (2.0 * h)
            assert np.max(np.abs(j - fd)) < 1e-6

    def test_complex_directional_derivative(self):
        rng = np.random.default_rng(29)
        p = ModelParams(1j, ALL_ONES)
        x = rng.uniform(-1, 1, size=3) + 1j * rng.uniform(-1, 1, size=3)
        v = rng.uniform(-1, 1, size=3) + 1j * rng.uniform(-1, 1, size=3)
        eps = 1e-6
        fd = (rhs(p, x + eps * v) - rhs(p, x - eps * v)) / (2.0 * eps)
        assert np.max(np.abs(jacobian(p, x) @ v - fd)) < 1e-6


class TestInteriorEquilibrium:
    def test_all_ones_matrix_is_singular(self):
        with pytest.raises(SingularMatrixError):
            interior_equilibrium(params_all_ones())

    def test_decoupled_logistic(self):
        p = ModelParams.from_couplings(3.0, 0, 0, 0, 0, 0, 0)
        assert np.allclose(interior_equilibrium(p), np.full(3, 3.0))

    def test_against_cramers_rule(self):
        # Independent 3x3 solve by cofactor expansion.
        p = ModelParams.from_couplings(1.0, 2.0, 0.5, 0.5, 2.0, 2.0, 0.5)
        a = p.a
        b = np.full(3, p.eta)

        def det3(m):
            return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                    - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                    + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))

        d = det3(a)
        expected = np.empty(3)
        for m in range(3):
            am = a.copy()
            am[:, m] = b
            expected[m] = det3(am) / d
        x_star = interior_equilibrium(p)
        assert np.max(np.abs(x_star - expected)) < 1e-12

    def test_equilibrium_annihilates_rhs(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            p = random_params(rng, eta=rng.uniform(0.5, 2.0))
            try:
                x_star = interior_equilibrium(p)
            except SingularMatrixError:
                continue
            r = np.linalg.norm(rhs(p, x_star))
            assert r < 1e-10 * (1.0 + np.linalg.norm(x_star))


class TestReduceSymmetric:
    def test_unit_couplings(self):
        p = reduce_symmetric(SymmetricParams(1.0, 1.0))
        assert np.array_equal(p.a, ALL_ONES)
        assert p.eta == 1.0

    def test_zero_couplings_give_identity(self):
        p = reduce_symmetric(SymmetricParams(0.0, 0.0))
        assert np.array_equal(p.a, np.eye(3))

    def test_cyclic_pattern(self):
        p = reduce_symmetric(SymmetricParams(2.0, 3.0))
        expected = np.array([[1.0, 2.0, 3.0],
                             [3.0, 1.0, 2.0],
                             [2.0, 3.0, 1.0]])
        assert np.array_equal(p.a, expected)


class TestRescaleToUnitEta:
    def test_identity_at_unit_eta(self):
        p = params_all_ones()
        x0 = np.array([0.2, 0.3, 0.4])
        q, y0, scale = rescale_to_unit_eta(p, x0)
        assert q.eta == 1.0
        assert scale == 1.0
        assert np.array_equal(y0, x0)

    def test_division_by_eta(self):
        p = params_all_ones(eta=2.0)
        q, y0, scale = rescale_to_unit_eta(p, np.full(3, 2.0))
        assert q.eta == 1.0
        assert scale == 2.0
        assert np.array_equal(y0, np.ones(3))
        assert np.array_equal(q.a, p.a)

    def test_zero_eta_rejected(self):
        with pytest.raises(ZeroEtaError):
            rescale_to_unit_eta(params_all_ones(eta=1e-301), np.ones(3))

    def test_complex_eta(self):
        q, y0, scale = rescale_to_unit_eta(ModelParams(2j, ALL_ONES),
                                           np.array([2j, 2j, 2j]))
        assert scale == 2j
        assert np.allclose(y0, np.ones(3))
        assert q.eta == 1.0 + 0j
