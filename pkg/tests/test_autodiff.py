"""Dual-number forward differentiation: exact derivative oracles."""
import numpy as np
import pytest

from bayescal import autodiff as ad


def central_diff(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


class TestArithmetic:
    def test_addition_and_scaling(self):
        x = ad.seed([2.0, 3.0])
        y = 2.0 * x[0] + x[1] - 1.5
        assert y.val == pytest.approx(5.5)
        assert np.allclose(y.tan, [2.0, 1.0])

    def test_product_rule(self):
        x = ad.seed([2.0, 3.0])
        y = x[0] * x[1]
        assert y.val == 6.0
        assert np.allclose(y.tan, [3.0, 2.0])

    def test_quotient_rule(self):
        x = ad.seed([6.0, 3.0])
        y = x[0] / x[1]
        assert y.val == 2.0
        assert np.allclose(y.tan, [1.0 / 3.0, -6.0 / 9.0])

    def test_reciprocal(self):
        x = ad.seed([4.0])
        y = 1.0 / x[0]
        assert y.val == 0.25
        assert np.allclose(y.tan, [-1.0 / 16.0])

    def test_integer_power(self):
        x = ad.seed([3.0])
        y = x[0] ** 3
        assert y.val == 27.0
        assert np.allclose(y.tan, [27.0])

    def test_negation_and_rsub(self):
        x = ad.seed([2.0])
        y = 5.0 - (-x[0])
        assert y.val == 7.0
        assert np.allclose(y.tan, [1.0])

    def test_comparisons_use_values(self):
        x = ad.seed([2.0, 3.0])
        assert x[0] < x[1]
        assert x[1] >= x[0]
        assert not (x[0] == x[1])
        assert x[0] != x[1]


class TestPrimitives:
    def test_exp_log_sqrt(self):
        x = ad.seed([0.7, 2.5, 4.0])
        assert np.allclose(ad.exp(x[0]).tan, [np.exp(0.7), 0, 0])
        assert np.allclose(ad.log(x[1]).tan, [0, 1 / 2.5, 0])
        assert np.allclose(ad.sqrt(x[2]).tan, [0, 0, 0.25])

    def test_erf_derivative(self):
        x = ad.seed([0.3])
        y = ad.erf(x[0])
        expected = 2.0 / np.sqrt(np.pi) * np.exp(-0.09)
        assert np.allclose(y.tan, [expected])

    def test_expm1_log1p_near_zero(self):
        x = ad.seed([1e-12])
        assert ad.expm1(x[0]).val == pytest.approx(1e-12, rel=1e-6)
        assert np.allclose(ad.expm1(x[0]).tan, [np.exp(1e-12)])
        assert ad.log1p(x[0]).val == pytest.approx(1e-12, rel=1e-6)
        assert np.allclose(ad.log1p(x[0]).tan, [1.0 / (1.0 + 1e-12)])

    def test_primitives_pass_floats_through(self):
        assert ad.exp(1.0) == np.exp(1.0)
        assert ad.log(2.0) == np.log(2.0)
        assert ad.sqrt(9.0) == 3.0


class TestGradient:
    def test_composite_against_hand_derivative(self):
        def f(x):
            return ad.exp(x[0]) * ad.log(x[1]) + ad.sqrt(x[2])

        x = np.array([0.5, 2.0, 9.0])
        g = ad.gradient(f, x)
        expected = [np.exp(0.5) * np.log(2.0), np.exp(0.5) / 2.0, 1.0 / 6.0]
        assert np.allclose(g, expected, rtol=1e-14)

    def test_against_central_differences(self):
        def f_dual(x):
            return ad.erf(x[0] * x[1]) + ad.exp(-x[2] ** 2) / x[1]

        def f_plain(x):
            from scipy.special import erf
            return erf(x[0] * x[1]) + np.exp(-x[2] ** 2) / x[1]

        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.uniform(0.3, 1.5, size=3)
            g = ad.gradient(f_dual, x)
            assert np.allclose(g, central_diff(f_plain, x), rtol=1e-7, atol=1e-9)

    def test_value_path_is_bitwise_identical(self):
        # attaching tangents must not perturb the primal floating-point path
        def f(x):
            return ad.log(x[0]) * x[1] + x[0] / x[1]

        x = np.array([1.7, 0.9])
        plain = np.log(x[0]) * x[1] + x[0] / x[1]
        dual = f(ad.seed(x))
        assert dual.val == plain  # bit-exact


class TestStructure:
    def test_seed_identity_tangents(self):
        x = ad.seed([5.0, 6.0, 7.0])
        assert np.array_equal(x.tan, np.eye(3))
        assert np.array_equal(x.val, [5.0, 6.0, 7.0])

    def test_value_and_partials_accessors(self):
        x = ad.seed([2.0, 3.0])
        y = x[0] * x[1]
        assert ad.value(y) == 6.0
        assert np.allclose(ad.partials(y), [3.0, 2.0])
        assert ad.value(1.25) == 1.25
        with pytest.raises(TypeError):
            ad.partials(1.25)  # plain numbers carry no tangents

    def test_matvec_matches_manual(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        x = ad.seed([1.0, 1.0])
        y = ad.matvec(a, x)
        assert np.allclose(ad.value(y), [3.0, 7.0])
        assert np.allclose(ad.partials(y), a)

    def test_stack_concatenates_scalars(self):
        x = ad.seed([2.0, 3.0])
        s = ad.stack([x[0] * x[1], x[0] + x[1]])
        assert np.allclose(ad.value(s), [6.0, 5.0])
        assert np.allclose(ad.partials(s), [[3.0, 2.0], [1.0, 1.0]])

    def test_sum_and_ravel(self):
        x = ad.seed([1.0, 2.0, 3.0])
        total = (x * 2.0).sum()
        assert ad.value(total) == 12.0
        assert np.allclose(ad.partials(total), [2.0, 2.0, 2.0])

    def test_tangent_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ad.Dual(np.zeros(3), np.zeros((2, 4)))
