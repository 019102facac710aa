"""Tensor primitive contracts: shapes, broadcasting, numerics."""

import numpy as np
import pytest

from cosrec.tensor import (ShapeError, elementwise, matmul, reduce,
                           resolve_dtype, reshape, sigmoid, softplus)


class TestMatmul:
    def test_identity(self):
        b = np.arange(12.0).reshape(3, 4)
        assert np.array_equal(matmul(np.eye(3), b), b)

    def test_hand_product(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0], [1.0]])
        assert np.array_equal(matmul(a, b), np.array([[2.0], [4.0]]))

    def test_zero_matrix(self):
        b = np.ones((4, 2))
        assert np.array_equal(matmul(np.zeros((3, 4)), b), np.zeros((3, 2)))

    def test_inner_mismatch_names_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 2\)"):
            matmul(np.ones((2, 3)), np.ones((4, 2)))

    def test_rejects_non_2d(self):
        with pytest.raises(ShapeError):
            matmul(np.ones(3), np.ones((3, 2)))

    def test_associativity(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = rng.standard_normal((4, 5))
            b = rng.standard_normal((5, 3))
            c = rng.standard_normal((3, 6))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            denom = np.maximum(np.abs(left) + np.abs(right), 1e-12)
            assert np.max(np.abs(left - right) / denom) < 1e-10

    def test_associativity_float32(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 5)).astype(np.float32)
        b = rng.standard_normal((5, 3)).astype(np.float32)
        c = rng.standard_normal((3, 6)).astype(np.float32)
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        denom = np.maximum(np.abs(left) + np.abs(right), np.float32(1e-6))
        assert np.max(np.abs(left - right) / denom) < 1e-5


class TestElementwise:
    def test_add_zero(self):
        a = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(elementwise("add", a, np.zeros_like(a)), a)

    def test_mul_one(self):
        a = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(elementwise("mul", a, np.ones_like(a)), a)

    def test_add_vectors(self):
        out = elementwise("add", np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert np.array_equal(out, np.array([4.0, 6.0]))

    def test_channel_broadcast(self):
        a = np.ones((2, 3, 4, 4))
        b = np.array([1.0, 2.0, 3.0])
        out = elementwise("add", a, b)
        assert out.shape == a.shape
        assert np.array_equal(out[:, 1], np.full((2, 4, 4), 3.0))

    def test_incompatible_rejected(self):
        with pytest.raises(ShapeError):
            elementwise("add", np.ones((2, 3)), np.ones((3, 2)))

    def test_broadcast_add_distributes_over_sum(self):
        # summing after a channel-broadcast add equals summing first and
        # adding the scaled vector
        rng = np.random.default_rng(3)
        a = rng.standard_normal((2, 3, 4, 4))
        b = rng.standard_normal(3)
        lhs = reduce("sum", elementwise("add", a, b), axes=(0, 2, 3))
        rhs = reduce("sum", a, axes=(0, 2, 3)) + b * (2 * 4 * 4)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


class TestReduce:
    def test_sum_all(self):
        assert reduce("sum", np.array([[1.0, 2.0], [3.0, 4.0]])) == 10.0

    def test_mean(self):
        assert reduce("mean", np.array([2.0, 4.0])) == 3.0

    def test_max_axis(self):
        out = reduce("max", np.array([[1.0, 5.0], [3.0, 4.0]]), axes=1)
        assert np.array_equal(out, np.array([5.0, 4.0]))

    def test_zero_extent_rejected(self):
        with pytest.raises(ShapeError):
            reduce("sum", np.zeros((0, 3)), axes=0)


class TestReshape:
    def test_round_trip_preserves_data(self, rng):
        a = rng.standard_normal((3, 4, 5))
        back = reshape(reshape(a, (60,)), (3, 4, 5))
        assert np.array_equal(back, a)

    def test_bad_size_rejected(self):
        with pytest.raises(ShapeError):
            reshape(np.ones(6), (4,))


class TestScalarFunctions:
    def test_sigmoid_at_zero(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5

    def test_sigmoid_extremes_stay_finite(self):
        out = sigmoid(np.array([-1000.0, 1000.0]))
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(0.0, abs=1e-12)
        assert out[1] == pytest.approx(1.0, abs=1e-12)

    def test_sigmoid_preserves_dtype(self):
        assert sigmoid(np.array([1.0], dtype=np.float32)).dtype == np.float32

    def test_softplus_matches_reference(self, rng):
        x = rng.standard_normal(100) * 5
        assert np.allclose(softplus(x), np.log1p(np.exp(x)), rtol=1e-12)

    def test_softplus_no_overflow(self):
        out = softplus(np.array([1000.0]))
        assert np.isfinite(out[0])
        assert out[0] == pytest.approx(1000.0)


class TestResolveDtype:
    def test_names(self):
        assert resolve_dtype("float32") == np.float32
        assert resolve_dtype("float64") == np.float64

    def test_rejects_others(self):
        with pytest.raises(ValueError):
            resolve_dtype("int32")
        with pytest.raises(ValueError):
            resolve_dtype(np.int64)
