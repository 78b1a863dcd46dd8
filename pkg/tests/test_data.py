import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from csisim.data import (
    CLASSIFICATION,
    Dataset,
    FeatureMatrix,
    as_vector,
    matvec,
    standardize,
    transpose_matvec,
)


class TestMatvec:
    def test_identity(self):
        np.testing.assert_array_equal(matvec(FeatureMatrix(np.eye(2)), [3.0, -4.0]), [3.0, -4.0])

    def test_zero_matrix(self):
        np.testing.assert_array_equal(matvec(FeatureMatrix(np.zeros((3, 2))), [1.0, 7.0]), np.zeros(3))

    def test_sparse_row(self):
        m = FeatureMatrix.from_rows([[(0, 1.0), (2, 2.0)]], d=3)
        assert matvec(m, [1.0, 1.0, 1.0])[0] == 3.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matvec(FeatureMatrix(np.eye(2)), [1.0, 2.0, 3.0])


class TestTransposeMatvec:
    def test_identity(self):
        v = np.array([0.5, -2.0, 3.0])
        np.testing.assert_array_equal(transpose_matvec(FeatureMatrix(np.eye(3)), v), v)

    def test_hand_case(self):
        m = FeatureMatrix(np.array([[1.0, 0.0], [1.0, 0.0]]))
        np.testing.assert_array_equal(transpose_matvec(m, [1.0, 1.0]), [2.0, 0.0])

    def test_zero_vector(self):
        m = FeatureMatrix(np.arange(6.0).reshape(3, 2))
        np.testing.assert_array_equal(transpose_matvec(m, np.zeros(3)), np.zeros(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            transpose_matvec(FeatureMatrix(np.eye(2)), [1.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_adjointness(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w, v = rng.normal(size=d), rng.normal(size=n)
    m = FeatureMatrix(X)
    lhs = matvec(m, w) @ v
    rhs = w @ transpose_matvec(m, v)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**31 - 1))
def test_sparse_dense_equivalence(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * (rng.random((n, d)) < 0.4)
    dense, sparse = FeatureMatrix(X), FeatureMatrix(sp.csr_matrix(X))
    w, v = rng.normal(size=d), rng.normal(size=n)
    np.testing.assert_allclose(matvec(sparse, w), matvec(dense, w), atol=1e-12)
    np.testing.assert_allclose(transpose_matvec(sparse, v), transpose_matvec(dense, v), atol=1e-12)
    np.testing.assert_array_equal(sparse.to_dense().raw, X)


class TestConstruction:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_vector([1.0, np.nan])
        with pytest.raises(ValueError):
            FeatureMatrix(np.array([[1.0, np.inf]]))
        with pytest.raises(ValueError):
            FeatureMatrix(sp.csr_matrix(np.array([[np.nan, 0.0]])))

    def test_sparse_rows_must_increase(self):
        with pytest.raises(ValueError):
            FeatureMatrix.from_rows([[(2, 1.0), (1, 1.0)]], d=3)
        with pytest.raises(ValueError):
            FeatureMatrix.from_rows([[(3, 1.0)]], d=3)

    def test_immutable(self):
        m = FeatureMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.raw[0, 0] = 5.0
        v = as_vector([1.0, 2.0])
        with pytest.raises(ValueError):
            v[0] = 3.0

    def test_response_length(self):
        with pytest.raises(ValueError):
            Dataset(np.eye(2), [1.0])

    def test_classification_labels(self):
        Dataset(np.eye(2), [1.0, -1.0], CLASSIFICATION)
        with pytest.raises(ValueError):
            Dataset(np.eye(2), [1.0, 0.0], CLASSIFICATION)


class TestStandardize:
    def test_two_point_column(self):
        ds = Dataset(np.array([[1.0], [3.0]]), [0.0, 0.0])
        out, means, scales = standardize(ds)
        np.testing.assert_array_equal(out.features.raw[:, 0], [-1.0, 1.0])
        assert means[0] == 2.0 and scales[0] == 1.0

    def test_constant_column(self):
        ds = Dataset(np.array([[5.0], [5.0]]), [0.0, 1.0])
        out, means, scales = standardize(ds)
        np.testing.assert_array_equal(out.features.raw[:, 0], [0.0, 0.0])
        assert scales[0] == 1.0

    def test_already_standard_is_fixed_point(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20, 3))
        X = (X - X.mean(0)) / X.std(0)
        out, _, _ = standardize(Dataset(X, np.zeros(20)))
        np.testing.assert_allclose(out.features.raw, X, atol=1e-12)

    def test_moments_and_inverse(self):
        rng = np.random.default_rng(1)
        X = rng.normal(3.0, 2.0, size=(50, 4))
        out, means, scales = standardize(Dataset(X, np.zeros(50)))
        Z = out.features.raw
        np.testing.assert_allclose(Z.mean(0), 0.0, atol=1e-12)
        np.testing.assert_allclose(Z.std(0), 1.0, atol=1e-12)
        np.testing.assert_allclose(Z * scales + means, X, atol=1e-12)

    def test_sparse_input(self):
        X = np.array([[0.0, 2.0], [4.0, 0.0], [0.0, 0.0]])
        a, _, _ = standardize(Dataset(sp.csr_matrix(X), np.zeros(3)))
        b, _, _ = standardize(Dataset(X, np.zeros(3)))
        np.testing.assert_allclose(a.features.raw, b.features.raw, atol=1e-15)

    def test_too_small(self):
        with pytest.raises(ValueError):
            standardize(Dataset(np.zeros((0, 2)), np.zeros(0)))
        with pytest.raises(ValueError):
            standardize(Dataset(np.zeros((1, 2)), np.zeros(1)))
