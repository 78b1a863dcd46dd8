"""Hard-thresholding projections onto sets of vectors built from few atoms.

Four atom families are supported:

* ``SparseProjector`` -- signed coordinate vectors; keep the s largest
  magnitudes.
* ``GroupProjector`` -- unit disks over a partition of the coordinates; keep
  the s groups with largest Euclidean norm.
* ``LowRankProjector`` -- unit-rank matrices over a (rows, cols) reshape of
  the vector; keep the best rank-s approximation.
* ``GraphLowRankProjector`` -- unit-rank matrices after weighting rows and
  columns by graph-Laplacian factors; truncate rank in the weighted space.

Matrices are vectorized in row-major order.
"""
import warnings

import numpy as np

__all__ = [
    "SparseProjector",
    "GroupProjector",
    "LowRankProjector",
    "GraphLowRankProjector",
    "GraphFactors",
    "project",
    "atomic_cardinality_upper",
    "build_graph_factors",
    "truncated_svd",
    "read_groups",
    "read_laplacian",
]


def _check_len(w, d):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d,):
        raise ValueError(f"vector has shape {w.shape}, projector expects ({d},)")
    return w


def _too_many(s, n_atoms, kind):
    if s >= n_atoms:
        if s > n_atoms:
            warnings.warn(
                f"s={s} exceeds the {n_atoms} available {kind}; projection is the identity",
                stacklevel=3,
            )
        return True
    return False


class SparseProjector:
    def __init__(self, d, s):
        if s < 1:
            raise ValueError("atom budget s must be >= 1")
        self.d = int(d)
        self.s = int(s)

    @property
    def n_atoms(self):
        return self.d

    def project(self, w):
        w = _check_len(w, self.d)
        if _too_many(self.s, self.d, "coordinates"):
            return w.copy()
        # stable sort: ties go to the lowest index
        keep = np.argsort(-np.abs(w), kind="stable")[: self.s]
        out = np.zeros_like(w)
        out[keep] = w[keep]
        return out

    def cardinality(self, w, tol=0.0):
        w = _check_len(w, self.d)
        return int(np.count_nonzero(np.abs(w) > tol))

    def describe(self):
        return {"atoms": "sparse", "s": self.s, "d": self.d}


class GroupProjector:
    """Group hard thresholding over a partition of ``range(d)``.

    Parameters
    ----------
    groups : sequence of sequences of int
        Disjoint index sets that together cover ``0 .. d-1``.
    s : int
        Number of groups to keep.
    """

    def __init__(self, groups, s, d=None):
        if s < 1:
            raise ValueError("atom budget s must be >= 1")
        groups = [np.asarray(sorted(g), dtype=np.int64) for g in groups]
        if any(g.size == 0 for g in groups):
            raise ValueError("empty group")
        flat = np.concatenate(groups) if groups else np.zeros(0, dtype=np.int64)
        d = int(flat.size if d is None else d)
        if flat.size != np.unique(flat).size:
            raise ValueError("groups overlap; only partitions are supported")
        if flat.size != d or (d and (flat.min() != 0 or flat.max() != d - 1)):
            raise ValueError(f"groups do not cover indices 0..{d - 1} exactly")
        self.groups = groups
        self.d = d
        self.s = int(s)
        self._perm = flat
        self._starts = np.cumsum([0] + [g.size for g in groups[:-1]])
        self._group_of = np.empty(d, dtype=np.int64)
        for gid, g in enumerate(groups):
            self._group_of[g] = gid

    @property
    def n_atoms(self):
        return len(self.groups)

    def group_norms(self, w):
        w = _check_len(w, self.d)
        return np.sqrt(np.add.reduceat(w[self._perm] ** 2, self._starts))

    def project(self, w):
        w = _check_len(w, self.d)
        if _too_many(self.s, len(self.groups), "groups"):
            return w.copy()
        keep = np.argsort(-self.group_norms(w), kind="stable")[: self.s]
        mask = np.isin(self._group_of, keep)
        return np.where(mask, w, 0.0)

    def cardinality(self, w, tol=0.0):
        return int(np.count_nonzero(self.group_norms(w) > tol))

    def describe(self):
        return {"atoms": "group", "s": self.s, "d": self.d, "groups": [g.tolist() for g in self.groups]}


def _fix_signs(U, Vt):
    """Make the first nonzero entry of each column of U positive."""
    for j in range(U.shape[1]):
        nz = np.flatnonzero(np.abs(U[:, j]) > 1e-14)
        if nz.size and U[nz[0], j] < 0:
            U[:, j] *= -1
            Vt[j] *= -1
    return U, Vt


def truncated_svd(A, s, oversample=2, max_iter=200, tol=1e-10, seed=0):
    """Top-s singular triplets of `A` by block subspace iteration.

    A Gaussian block of ``s + oversample`` columns (fixed seed) is
    repeatedly multiplied by ``A A^T`` and re-orthonormalized; the Ritz
    approximation of rank s is monitored and iteration stops once its
    relative change drops below `tol` or after `max_iter` rounds. When the
    block is as wide as the smaller dimension of `A` the result is exact.

    Returns ``(U, S, Vt)`` with ``U`` of shape (rows, s).
    """
    rows, cols = A.shape
    k = min(s + oversample, rows, cols)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(A @ rng.standard_normal((cols, k)))
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros((rows, s)), np.zeros(s), np.zeros((s, cols))

    def ritz(Q):
        Ub, S, Vt = np.linalg.svd(Q.T @ A, full_matrices=False)
        return Q @ Ub[:, :s], S[:s], Vt[:s]

    U, S, Vt = ritz(Q)
    if k < min(rows, cols):
        prev = (U * S) @ Vt
        for _ in range(max_iter):
            Q, _ = np.linalg.qr(A @ (A.T @ Q))
            U, S, Vt = ritz(Q)
            cur = (U * S) @ Vt
            if np.linalg.norm(cur - prev) <= tol * scale:
                break
            prev = cur
    U, Vt = _fix_signs(U.copy(), Vt.copy())
    return U, S, Vt


def _numerical_rank(A, tol):
    if A.size == 0:
        return 0
    sv = np.linalg.svd(A, compute_uv=False)
    return int(np.count_nonzero(sv > tol))


class LowRankProjector:
    """Best rank-s approximation of the vector reshaped to (rows, cols)."""

    def __init__(self, rows, cols, s, power_iters=200, power_tol=1e-10, seed=0):
        if s < 1:
            raise ValueError("atom budget s must be >= 1")
        if rows < 1 or cols < 1:
            raise ValueError("matrix shape must be positive")
        self.rows = int(rows)
        self.cols = int(cols)
        self.d = self.rows * self.cols
        self.s = int(s)
        self.power_iters = int(power_iters)
        self.power_tol = float(power_tol)
        self.seed = int(seed)

    @property
    def n_atoms(self):
        return min(self.rows, self.cols)

    def _truncate(self, W):
        U, S, Vt = truncated_svd(W, self.s, max_iter=self.power_iters, tol=self.power_tol, seed=self.seed)
        return (U * S) @ Vt

    def project(self, w):
        w = _check_len(w, self.d)
        if _too_many(self.s, self.n_atoms, "rank-one atoms"):
            return w.copy()
        return self._truncate(w.reshape(self.rows, self.cols)).reshape(-1)

    def cardinality(self, w, tol=1e-10):
        w = _check_len(w, self.d)
        return _numerical_rank(w.reshape(self.rows, self.cols), tol)

    def describe(self):
        return {"atoms": "lowrank", "s": self.s, "shape": [self.rows, self.cols]}


class GraphFactors:
    """Eigen-factors of regularized row and column Laplacians."""

    def __init__(self, U_u, S_u, U_v, S_v):
        self.U_u, self.S_u, self.U_v, self.S_v = U_u, S_u, U_v, S_v


def _eig_factor(L, eps, side):
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"{side} Laplacian must be square, got shape {L.shape}")
    if not np.all(np.isfinite(L)):
        raise ValueError(f"{side} Laplacian has non-finite entries")
    if np.max(np.abs(L - L.T), initial=0.0) > 1e-10:
        raise ValueError(f"{side} Laplacian is not symmetric")
    lam0 = np.linalg.eigvalsh(L)
    if lam0.size and lam0[0] < -1e-10:
        raise ValueError(f"{side} Laplacian is not positive semidefinite (min eigenvalue {lam0[0]:.3g})")
    S, U = np.linalg.eigh(L + eps * np.eye(L.shape[0]))
    if S.size and S[0] <= 0.0:
        raise ValueError(f"{side} factor is singular; increase epsilon")
    U, _ = _fix_signs(U.copy(), np.zeros((U.shape[1], 0)))
    return U, S


def build_graph_factors(row_laplacian, col_laplacian, epsilon=1e-3):
    """Eigendecompose ``L + epsilon * I`` for the row and column graphs.

    A graph Laplacian always has the constant vector in its kernel, so
    `epsilon` must be strictly positive for the weighting to be invertible.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0: a graph Laplacian is singular")
    U_u, S_u = _eig_factor(row_laplacian, epsilon, "row")
    U_v, S_v = _eig_factor(col_laplacian, epsilon, "column")
    return GraphFactors(U_u, S_u, U_v, S_v)


class GraphLowRankProjector(LowRankProjector):
    """Rank truncation in the graph-weighted coordinates.

    ``W -> M = S_u^{1/2} U_u^T W U_v S_v^{1/2}``; M is truncated to rank s and
    mapped back by the inverse transform. The eigenvector matrices are
    orthogonal, so their inverses are transposes.
    """

    def __init__(self, rows, cols, s, factors, power_iters=200, power_tol=1e-10, seed=0):
        super().__init__(rows, cols, s, power_iters, power_tol, seed)
        f = factors
        if f.U_u.shape != (self.rows, self.rows) or f.U_v.shape != (self.cols, self.cols):
            raise ValueError("graph factors do not match the matrix shape")
        self.factors = f
        self._ru = np.sqrt(f.S_u)
        self._rv = np.sqrt(f.S_v)

    def to_weighted(self, W):
        f = self.factors
        return (self._ru[:, None] * (f.U_u.T @ W @ f.U_v)) * self._rv[None, :]

    def from_weighted(self, M):
        f = self.factors
        return f.U_u @ ((M / self._ru[:, None]) / self._rv[None, :]) @ f.U_v.T

    def project(self, w):
        w = _check_len(w, self.d)
        if _too_many(self.s, self.n_atoms, "rank-one atoms"):
            return w.copy()
        M = self.to_weighted(w.reshape(self.rows, self.cols))
        return self.from_weighted(self._truncate(M)).reshape(-1)

    def cardinality(self, w, tol=1e-10):
        w = _check_len(w, self.d)
        return _numerical_rank(self.to_weighted(w.reshape(self.rows, self.cols)), tol)

    def describe(self):
        return {"atoms": "graph", "s": self.s, "shape": [self.rows, self.cols]}


def project(proj, w):
    """Apply the projector's s-atom truncation to `w`."""
    return proj.project(w)


def atomic_cardinality_upper(proj, w, tol=0.0):
    """Count atoms with magnitude above `tol` in the canonical decomposition.

    Exact for the sparse and group families. For the matrix families it is
    the numerical rank, an upper bound on the minimal atom count.
    """
    if isinstance(proj, LowRankProjector) and tol == 0.0:
        tol = 1e-10
    return proj.cardinality(w, tol)


def read_groups(path):
    """One group per line, whitespace-separated zero-based indices."""
    groups = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                groups.append([int(tok) for tok in line.split()])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: group indices must be integers") from None
    return groups


def read_laplacian(path):
    """Dense square matrix from a comma-separated file."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric entry") from None
    if any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.float64)
