import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csisim.atoms import (
    GraphLowRankProjector,
    GroupProjector,
    LowRankProjector,
    SparseProjector,
    atomic_cardinality_upper,
    build_graph_factors,
    project,
    read_groups,
    read_laplacian,
    truncated_svd,
)
from oracles import best_group, best_sparse, svd_truncate


def path_laplacian(n):
    L = np.zeros((n, n))
    for i in range(n - 1):
        L[i, i] += 1
        L[i + 1, i + 1] += 1
        L[i, i + 1] = L[i + 1, i] = -1
    return L


class TestSparse:
    def test_keep_two_largest(self):
        np.testing.assert_array_equal(project(SparseProjector(3, 2), [3.0, -1.0, 2.0]), [3.0, 0.0, 2.0])

    def test_ties_keep_lowest_index(self):
        np.testing.assert_array_equal(SparseProjector(4, 2).project([1.0, -1.0, 1.0, 0.5]), [1.0, -1.0, 0.0, 0.0])

    def test_cardinality(self):
        assert atomic_cardinality_upper(SparseProjector(3, 1), [0.0, 0.0, 5.0]) == 1

    def test_budget_above_atoms_is_identity(self):
        with pytest.warns(UserWarning):
            out = SparseProjector(2, 5).project([1.0, 2.0])
        np.testing.assert_array_equal(out, [1.0, 2.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            SparseProjector(3, 1).project([1.0, 2.0])

    def test_s_positive(self):
        with pytest.raises(ValueError):
            SparseProjector(3, 0)


class TestGroup:
    def test_hand_case(self):
        proj = GroupProjector([[0, 1], [2]], 1)
        np.testing.assert_array_equal(proj.project([1.0, 1.0, 3.0]), [0.0, 0.0, 3.0])

    def test_cardinality(self):
        assert atomic_cardinality_upper(GroupProjector([[0, 1], [2]], 1), [1.0, 0.0, 0.0]) == 1

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            GroupProjector([[0, 1], [1, 2]], 1)

    def test_rejects_gap(self):
        with pytest.raises(ValueError):
            GroupProjector([[0], [2]], 1)
        with pytest.raises(ValueError):
            GroupProjector([[0, 1]], 1, d=3)

    def test_read_groups(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n\n2 3 4\n")
        assert read_groups(f) == [[0, 1], [2, 3, 4]]
        f.write_text("0 x\n")
        with pytest.raises(ValueError, match=":1:"):
            read_groups(f)


class TestLowRank:
    def test_rank_one_fixed_point(self):
        W = np.outer([1.0, -2.0, 0.5], [3.0, 1.0, -1.0, 2.0])
        out = LowRankProjector(3, 4, 1).project(W.reshape(-1))
        np.testing.assert_allclose(out, W.reshape(-1), atol=1e-8)

    def test_diag(self):
        out = LowRankProjector(2, 2, 1).project(np.diag([3.0, 1.0]).reshape(-1))
        np.testing.assert_allclose(out.reshape(2, 2), np.diag([3.0, 0.0]), atol=1e-12)

    def test_cardinality_identity(self):
        assert atomic_cardinality_upper(LowRankProjector(2, 2, 1), np.eye(2).reshape(-1)) == 2

    def test_power_iteration_on_larger_matrix(self):
        rng = np.random.default_rng(2)
        U = np.linalg.qr(rng.normal(size=(40, 40)))[0]
        V = np.linalg.qr(rng.normal(size=(30, 30)))[0]
        S = 0.7 ** np.arange(30)
        W = (U[:, :30] * S) @ V.T
        out = LowRankProjector(40, 30, 3).project(W.reshape(-1)).reshape(40, 30)
        np.testing.assert_allclose(out, svd_truncate(W, 3), atol=1e-8)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(LowRankProjector(3, 3, 1).project(np.zeros(9)), np.zeros(9))

    def test_sign_convention(self):
        rng = np.random.default_rng(0)
        U, S, Vt = truncated_svd(rng.normal(size=(5, 4)), 2)
        for j in range(2):
            first = U[np.flatnonzero(np.abs(U[:, j]) > 1e-14)[0], j]
            assert first > 0


class TestGraphFactors:
    def test_edgeless_graph(self):
        f = build_graph_factors(np.zeros((2, 2)), np.zeros((3, 3)), epsilon=1.0)
        np.testing.assert_allclose(f.U_u, np.eye(2))
        np.testing.assert_allclose(f.S_u, np.ones(2))
        np.testing.assert_allclose(f.S_v, np.ones(3))

    def test_edgeless_degenerates_to_low_rank(self):
        rng = np.random.default_rng(4)
        w = rng.normal(size=12)
        f = build_graph_factors(np.zeros((3, 3)), np.zeros((4, 4)), epsilon=1.0)
        np.testing.assert_allclose(GraphLowRankProjector(3, 4, 1, f).project(w), LowRankProjector(3, 4, 1).project(w), atol=1e-12)

    def test_path_graph_eigenvalues(self):
        f = build_graph_factors(path_laplacian(2), path_laplacian(2), epsilon=0.1)
        np.testing.assert_allclose(f.S_u, [0.1, 2.1], atol=1e-12)

    def test_zero_epsilon_rejected(self):
        with pytest.raises(ValueError):
            build_graph_factors(path_laplacian(3), path_laplacian(3), epsilon=0.0)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            build_graph_factors(np.array([[1.0, -1.0], [0.0, 1.0]]), path_laplacian(2))

    def test_indefinite_rejected(self):
        with pytest.raises(ValueError, match="semidefinite"):
            build_graph_factors(-path_laplacian(2), path_laplacian(2))

    def test_read_laplacian(self, tmp_path):
        f = tmp_path / "L.csv"
        f.write_text("1,-1\n-1,1\n")
        np.testing.assert_array_equal(read_laplacian(f), path_laplacian(2))


def _random_groups(rng, d):
    perm = rng.permutation(d)
    cuts = np.sort(rng.choice(np.arange(1, d), size=rng.integers(1, d), replace=False)) if d > 1 else []
    return [sorted(g.tolist()) for g in np.split(perm, cuts)]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_sparse_matches_enumeration(d, seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d)
    s = int(rng.integers(1, d + 1))
    out = SparseProjector(d, s).project(w)
    _, best = best_sparse(w, s)
    assert abs(np.sum((out - w) ** 2) - best) <= 1e-8
    np.testing.assert_array_equal(SparseProjector(d, s).project(out), out)
    assert atomic_cardinality_upper(SparseProjector(d, s), out) <= s


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_group_matches_enumeration(d, seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d)
    groups = _random_groups(rng, d)
    s = int(rng.integers(1, len(groups) + 1))
    proj = GroupProjector(groups, s)
    out = proj.project(w)
    _, best = best_group(w, groups, s)
    assert abs(np.sum((out - w) ** 2) - best) <= 1e-8
    np.testing.assert_array_equal(proj.project(out), out)
    assert atomic_cardinality_upper(proj, out) <= s


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_non_expansive_toward_feasible_points(seed):
    """No s-sparse vector on a grid is closer to w than the projection."""
    rng = np.random.default_rng(seed)
    d, s = 4, 2
    w = rng.normal(size=d)
    out = SparseProjector(d, s).project(w)
    dist = np.linalg.norm(out - w)
    grid = np.linspace(-3, 3, 7)
    for supp in itertools.combinations(range(d), s):
        for vals in itertools.product(grid, repeat=s):
            v = np.zeros(d)
            v[list(supp)] = vals
            assert dist <= np.linalg.norm(v - w) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_low_rank_matches_full_svd(s, seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(3, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        proj = LowRankProjector(3, 3, s)
        out = proj.project(W.reshape(-1)).reshape(3, 3)
        again = proj.project(out.reshape(-1)).reshape(3, 3)
    ref = svd_truncate(W, s)
    assert abs(np.sum((out - W) ** 2) - np.sum((ref - W) ** 2)) <= 1e-8
    np.testing.assert_allclose(out, ref, atol=1e-8)
    np.testing.assert_allclose(again, out, atol=1e-8)
    assert atomic_cardinality_upper(proj, out.reshape(-1)) <= s


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2**31 - 1))
def test_graph_low_rank_matches_weighted_svd(s, seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(3, 3))
    f = build_graph_factors(path_laplacian(3), path_laplacian(3), epsilon=0.05)
    proj = GraphLowRankProjector(3, 3, s, f)
    out = proj.project(W.reshape(-1)).reshape(3, 3)
    # oracle: explicit matrix square roots, full SVD, explicit inverse
    Ru = f.U_u @ np.diag(np.sqrt(f.S_u))
    Rv = f.U_v @ np.diag(np.sqrt(f.S_v))
    M = np.diag(np.sqrt(f.S_u)) @ np.linalg.inv(f.U_u) @ W @ np.linalg.inv(f.U_v).T @ np.diag(np.sqrt(f.S_v))
    Ms = svd_truncate(M, s)
    ref = np.linalg.inv(Ru.T) @ Ms @ np.linalg.inv(Rv)
    np.testing.assert_allclose(out, ref, atol=1e-8)
    Mo = proj.to_weighted(out)
    assert abs(np.sum((Mo - M) ** 2) - np.sum((Ms - M) ** 2)) <= 1e-8
    np.testing.assert_allclose(proj.project(out.reshape(-1)), out.reshape(-1), atol=1e-8)
    assert atomic_cardinality_upper(proj, out.reshape(-1)) <= s
