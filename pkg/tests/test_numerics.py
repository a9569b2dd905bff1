import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagrad.numerics import (
    axpy,
    from_dense,
    grad_inf_norm,
    hadamard_scale,
    make_rng,
    norms,
    sparse_grad,
    to_dense,
    weighted_inv_sq_norm,
)


class TestAxpy:
    def test_zero_coefficient_is_identity(self):
        np.testing.assert_array_equal(axpy(0.0, [3.0], [7.0]), [7.0])

    def test_unit_coefficient_adds(self):
        np.testing.assert_array_equal(axpy(1.0, [1.0, 2.0], [1.0, 2.0]), [2.0, 4.0])

    def test_negative_half(self):
        np.testing.assert_array_equal(axpy(-0.5, [2.0, 4.0], [1.0, 1.0]), [0.0, -1.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            axpy(1.0, [1.0], [1.0, 2.0])

    def test_nonfinite_coefficient(self):
        with pytest.raises(ValueError):
            axpy(float("nan"), [1.0], [1.0])


class TestHadamardScale:
    def test_cube_root_scaling(self):
        # independent high-precision value of 0.2 / 0.4^(1/3)
        out = hadamard_scale([0.2], [0.4], 0.0)
        np.testing.assert_allclose(out, [0.2714417616594907], atol=1e-6)

    def test_zero_numerator(self):
        np.testing.assert_array_equal(hadamard_scale([0.0], [5.0], 0.0), [0.0])

    def test_exact_cube(self):
        np.testing.assert_array_equal(hadamard_scale([1.0], [8.0], 0.0), [0.5])

    def test_zero_divisor_raises(self):
        with pytest.raises(ZeroDivisionError):
            hadamard_scale([1.0], [0.0], 0.0)

    def test_zero_divisor_ok_with_eps(self):
        out = hadamard_scale([1.0], [0.0], 0.5)
        np.testing.assert_array_equal(out, [2.0])

    def test_negative_denominator_rejected(self):
        with pytest.raises(ValueError):
            hadamard_scale([1.0], [-1.0], 1e-6)

    def test_matches_high_precision_power(self):
        rng = make_rng(3)
        num = rng.normal(size=200)
        den = np.abs(rng.normal(size=200)) + 1e-3
        out = hadamard_scale(num, den, 0.0)
        np.testing.assert_allclose(out, num * den ** (-1.0 / 3.0), rtol=1e-12)


class TestNorms:
    def test_three_four_five(self):
        assert norms(np.array([3.0, 4.0])) == (5.0, 4.0)

    def test_zero_vector(self):
        assert norms(np.zeros(8)) == (0.0, 0.0)

    def test_ones(self):
        assert norms(np.ones(4)) == (2.0, 1.0)


class TestWeightedInvSqNorm:
    def test_single(self):
        assert weighted_inv_sq_norm([2.0], [4.0]) == 1.0

    def test_zero_gradient(self):
        assert weighted_inv_sq_norm([0.0, 0.0], [1.0, 9.0]) == 0.0

    def test_mixed(self):
        assert weighted_inv_sq_norm([1.0, 2.0], [1.0, 2.0]) == 3.0

    def test_nonpositive_scaling_rejected(self):
        with pytest.raises(ValueError):
            weighted_inv_sq_norm([1.0], [0.0])


class TestRng:
    def test_same_seed_same_stream(self):
        a = make_rng(123).random(1_000_000)
        b = make_rng(123).random(1_000_000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(make_rng(1).random(100), make_rng(2).random(100))


class TestSparseGrad:
    def test_indices_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            sparse_grad([2, 2], [1.0, 1.0], 5)
        with pytest.raises(ValueError, match="strictly increasing"):
            sparse_grad([3, 1], [1.0, 1.0], 5)

    def test_indices_in_range(self):
        with pytest.raises(ValueError):
            sparse_grad([5], [1.0], 5)

    def test_densify_resparsify_idempotent(self):
        g = sparse_grad([1, 4], [2.0, -3.0], 6)
        again = from_dense(to_dense(g))
        assert np.array_equal(again.indices, g.indices)
        assert np.array_equal(again.values, g.values)
        assert again.dim == g.dim
        # zeros introduced by densify are dropped on re-sparsify
        dense = to_dense(g)
        assert from_dense(dense).indices.shape[0] == 2

    def test_inf_norm(self):
        assert grad_inf_norm(sparse_grad([0, 2], [1.0, -4.0], 3)) == 4.0
        assert grad_inf_norm(np.array([1.0, -2.0])) == 2.0
        assert grad_inf_norm(sparse_grad([], [], 3)) == 0.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20),
       st.floats(-1e3, 1e3))
@settings(max_examples=200, deadline=None)
def test_axpy_finite_on_finite_inputs(vals, a):
    x = np.array(vals)
    out = axpy(a, x, x)
    assert np.all(np.isfinite(out))


@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=20))
@settings(max_examples=200, deadline=None)
def test_hadamard_finite_on_positive_denoms(vals):
    d = np.array(vals)
    out = hadamard_scale(np.ones_like(d), d, 0.0)
    assert np.all(np.isfinite(out))
