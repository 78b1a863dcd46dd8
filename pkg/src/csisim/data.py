"""Numeric containers shared by the rest of the package.

Vectors are plain float64 numpy arrays that have passed :func:`as_vector`.
Feature matrices wrap either a dense row-major array or a CSR matrix; both
are made read-only on construction.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "as_vector",
    "FeatureMatrix",
    "Dataset",
    "REGRESSION",
    "CLASSIFICATION",
    "matvec",
    "transpose_matvec",
    "standardize",
]

REGRESSION = "regression"
CLASSIFICATION = "binary-classification"


def _freeze(a):
    a.setflags(write=False)
    return a


def as_vector(x, name="vector"):
    """Return `x` as a fresh read-only 1-d float64 array; reject NaN/Inf."""
    v = np.array(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        bad = int(np.flatnonzero(~np.isfinite(v))[0])
        raise ValueError(f"{name} has a non-finite entry at index {bad}")
    return _freeze(v)


class FeatureMatrix:
    """An n x d design matrix, rows are samples.

    Parameters
    ----------
    data : array_like or scipy.sparse matrix
        Dense 2-d data, or any scipy sparse matrix (converted to CSR with
        sorted, de-duplicated indices).
    """

    def __init__(self, data):
        if sp.issparse(data):
            m = sp.csr_matrix(data, dtype=np.float64, copy=True)
            m.sum_duplicates()
            m.sort_indices()
            if not np.all(np.isfinite(m.data)):
                raise ValueError("feature matrix has non-finite values")
            for arr in (m.data, m.indices, m.indptr):
                _freeze(arr)
            self._m = m
        else:
            a = np.array(data, dtype=np.float64, order="C")
            if a.ndim != 2:
                raise ValueError(f"feature matrix must be 2-d, got shape {a.shape}")
            if not np.all(np.isfinite(a)):
                r, c = np.argwhere(~np.isfinite(a))[0]
                raise ValueError(f"feature matrix has a non-finite value at ({r}, {c})")
            self._m = _freeze(a)

    @classmethod
    def from_rows(cls, rows, d):
        """Build a sparse matrix from per-row ``[(index, value), ...]`` lists.

        Indices are zero-based and must be strictly increasing within a row.
        """
        indptr = [0]
        indices = []
        values = []
        for i, row in enumerate(rows):
            last = -1
            for j, v in row:
                if j <= last:
                    raise ValueError(f"row {i}: indices must be strictly increasing")
                if j >= d:
                    raise ValueError(f"row {i}: index {j} out of range for d={d}")
                last = j
                indices.append(j)
                values.append(v)
            indptr.append(len(indices))
        m = sp.csr_matrix(
            (np.asarray(values, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(rows), d),
        )
        return cls(m)

    @property
    def is_sparse(self):
        return sp.issparse(self._m)

    @property
    def shape(self):
        return self._m.shape

    @property
    def n(self):
        return self._m.shape[0]

    @property
    def d(self):
        return self._m.shape[1]

    @property
    def raw(self):
        """The underlying read-only ndarray or CSR matrix."""
        return self._m

    def nnz(self):
        return self._m.nnz if self.is_sparse else int(np.count_nonzero(self._m))

    def to_dense(self):
        return FeatureMatrix(self._m.toarray()) if self.is_sparse else self

    def to_sparse(self):
        return self if self.is_sparse else FeatureMatrix(sp.csr_matrix(self._m))

    def rows(self, idx):
        """Sub-matrix with the given row indices, in the given order."""
        return FeatureMatrix(self._m[np.asarray(idx)])

    def dense_array(self):
        return self._m.toarray() if self.is_sparse else self._m

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"FeatureMatrix({kind}, n={self.n}, d={self.d})"


def _as_features(m):
    return m if isinstance(m, FeatureMatrix) else FeatureMatrix(m)


@dataclass(frozen=True)
class Dataset:
    features: FeatureMatrix
    responses: np.ndarray
    kind: str = REGRESSION

    def __post_init__(self):
        object.__setattr__(self, "features", _as_features(self.features))
        y = as_vector(self.responses, "responses")
        object.__setattr__(self, "responses", y)
        if y.shape[0] != self.features.n:
            raise ValueError(
                f"responses have length {y.shape[0]} but features have {self.features.n} rows"
            )
        if self.kind == CLASSIFICATION:
            if not np.all((y == 1.0) | (y == -1.0)):
                raise ValueError("binary-classification responses must be -1 or +1")
        elif self.kind != REGRESSION:
            raise ValueError(f"unknown dataset kind {self.kind!r}")

    @property
    def n(self):
        return self.features.n

    @property
    def d(self):
        return self.features.d

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features.rows(idx), self.responses[idx], self.kind)


def matvec(m, w):
    """Return ``X @ w`` as a length-n vector."""
    m = _as_features(m)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (m.d,):
        raise ValueError(f"weight vector has shape {w.shape}, expected ({m.d},)")
    return np.asarray(m.raw @ w, dtype=np.float64)


def transpose_matvec(m, v):
    """Return ``X.T @ v`` as a length-d vector."""
    m = _as_features(m)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.n,):
        raise ValueError(f"vector has shape {v.shape}, expected ({m.n},)")
    if m.is_sparse:
        return np.asarray(m.raw.T @ v, dtype=np.float64)
    return m.raw.T @ v


def standardize(ds):
    """Center and scale every column to mean 0, population std 1.

    Zero-variance columns are centered and keep scale 1. Sparse inputs come
    back dense since centering fills in the zeros.

    Returns
    -------
    (Dataset, means, scales)
        ``x_std = (x - means) / scales`` for any new row `x`.
    """
    if ds.n == 0:
        raise ValueError("cannot standardize an empty dataset")
    if ds.n < 2:
        raise ValueError("standardize needs at least two samples")
    X = ds.features.dense_array()
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales == 0.0] = 1.0
    Z = (X - means) / scales
    return Dataset(FeatureMatrix(Z), ds.responses, ds.kind), as_vector(means), as_vector(scales)
