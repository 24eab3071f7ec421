import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nystrom_landmarks.exceptions import DegenerateKernelError, ParameterError
from nystrom_landmarks.kernels import (
    PointCloud,
    combinatorial_laplacian,
    covariance_kernel,
    degree,
    gram_kernel,
    knn_adjacency,
    knn_graph_kernel,
    markov_matrix,
    rbf_kernel,
    standardize,
    symmetric_normalization,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def naive_rbf(X, sigma):
    N = len(X)
    out = np.empty((N, N))
    for i in range(N):
        for j in range(N):
            out[i, j] = np.exp(-np.sum((X[i] - X[j]) ** 2) / (2 * sigma**2))
    return out


class TestPointCloud:
    def test_validation(self):
        with pytest.raises(ParameterError):
            PointCloud(np.zeros((1, 3)))
        with pytest.raises(ParameterError):
            PointCloud([[0.0, np.nan], [1.0, 1.0]])
        with pytest.raises(ParameterError):
            PointCloud(np.zeros((3, 2)), tags=[1.0, 2.0])

    def test_one_dimensional_input_is_a_column(self):
        assert PointCloud([1.0, 2.0, 3.0]).points.shape == (3, 1)

    def test_take_reorders_tags(self):
        X = PointCloud(np.arange(6.0).reshape(3, 2), tags=[10.0, 11.0, 12.0])
        Y = X.take([2, 0, 1])
        np.testing.assert_array_equal(Y.tags, [12.0, 10.0, 11.0])
        np.testing.assert_array_equal(Y.points[0], [4.0, 5.0])

    def test_standardize(self, rng):
        X = np.column_stack([rng.normal(3, 2, 50), np.full(50, 7.0)])
        Z = standardize(X).points
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-14)
        np.testing.assert_allclose(Z.std(axis=0), [1.0, 0.0], atol=1e-14)


class TestRBF:
    def test_identical_points(self):
        np.testing.assert_array_equal(rbf_kernel([[1.0, 2.0], [1.0, 2.0]], 0.3).values, np.ones((2, 2)))

    def test_distance_sigma_sqrt2(self):
        sigma = 0.7
        Q = rbf_kernel([[0.0], [sigma * np.sqrt(2)]], sigma)
        assert Q.values[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-14)

    def test_matches_double_loop(self, rng):
        X = rng.standard_normal((10, 3))
        np.testing.assert_allclose(rbf_kernel(X, 1.3).values, naive_rbf(X, 1.3), rtol=0, atol=1e-14)

    def test_unit_diagonal_and_range(self, rng):
        Q = rbf_kernel(rng.standard_normal((20, 2)), 0.5).values
        np.testing.assert_array_equal(np.diag(Q), 1.0)
        assert np.all((Q > 0) & (Q <= 1))

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_bad_sigma(self, sigma):
        with pytest.raises(ParameterError):
            rbf_kernel(np.eye(3), sigma)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, N=st.integers(2, 100), sigma=st.floats(0.05, 5.0))
    def test_psd_property(self, seed, N, sigma):
        X = np.random.default_rng(seed).standard_normal((N, 3))
        assert np.linalg.eigvalsh(rbf_kernel(X, sigma).values)[0] >= -1e-8


class TestKnn:
    def test_collinear_path(self):
        A = knn_adjacency([[0.0], [1.0], [2.0]], 1)
        expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=bool)
        np.testing.assert_array_equal(A, expected)

    def test_complete_graph_limit(self, rng):
        X = rng.standard_normal((8, 2))
        G = knn_graph_kernel(X, 7, 0.9).values
        R = rbf_kernel(X, 0.9).values
        np.testing.assert_array_equal(np.diag(G), 0.0)
        off = ~np.eye(8, dtype=bool)
        np.testing.assert_allclose(G[off], R[off], rtol=1e-15)

    def test_matches_brute_force(self, rng):
        X = rng.standard_normal((20, 3))
        k = 4
        brute = np.zeros((20, 20), dtype=bool)
        for i in range(20):
            d = [(np.sum((X[i] - X[j]) ** 2), j) for j in range(20) if j != i]
            for _, j in sorted(d)[:k]:
                brute[i, j] = brute[j, i] = True
        np.testing.assert_array_equal(knn_adjacency(X, k), brute)

    def test_ties_go_to_lower_index(self):
        # point 2 is equidistant from 1 and 3, whose own nearest neighbours lie elsewhere
        A = knn_adjacency([[-1.1], [-1.0], [0.0], [1.0], [1.1]], 1)
        assert A[2, 1] and not A[2, 3]

    @pytest.mark.parametrize("k", [0, 5])
    def test_out_of_range(self, k):
        with pytest.raises(ParameterError):
            knn_adjacency(np.eye(5), k)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, N=st.integers(3, 40), data=st.data())
    def test_symmetric(self, seed, N, data):
        k = data.draw(st.integers(1, N - 1))
        X = np.random.default_rng(seed).standard_normal((N, 2))
        G = knn_graph_kernel(X, k, 1.0).values
        np.testing.assert_array_equal(G, G.T)
        assert np.all(np.sum(G > 0, axis=1) >= k)


class TestDegreeAndNormalizations:
    def test_degree_examples(self, rng):
        np.testing.assert_array_equal(degree(np.eye(3)), [1.0, 1.0, 1.0])
        np.testing.assert_array_equal(degree(np.ones((3, 3))), [3.0, 3.0, 3.0])
        Q = rbf_kernel(rng.standard_normal((12, 2)), 1.0).values
        oracle = [sum(Q[i, j] for j in range(12)) for i in range(12)]
        np.testing.assert_allclose(degree(Q), oracle, rtol=1e-14)

    def test_markov_examples(self):
        np.testing.assert_array_equal(markov_matrix(np.ones((2, 2))), np.full((2, 2), 0.5))
        path = knn_graph_kernel([[0.0], [1.0], [2.0]], 1, 1.0).values
        w = np.exp(-0.5)
        np.testing.assert_allclose(markov_matrix(path), [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]], atol=1e-15)
        assert path[0, 1] == pytest.approx(w)

    def test_markov_rows_sum_to_one(self, rng):
        P = markov_matrix(rbf_kernel(rng.standard_normal((30, 3)), 0.8))
        np.testing.assert_allclose(P @ np.ones(30), 1.0, atol=1e-12)

    def test_isolated_vertex_named(self):
        Q = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        with pytest.raises(DegenerateKernelError) as info:
            markov_matrix(Q)
        assert info.value.index == 2
        with pytest.raises(DegenerateKernelError):
            symmetric_normalization(Q)

    def test_constant_degree(self):
        Q = np.array([[2.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 2.0]])
        np.testing.assert_allclose(symmetric_normalization(Q).values, Q / 3.0, rtol=1e-15)

    def test_spectra_agree(self, rng):
        Q = rbf_kernel(rng.standard_normal((5, 2)), 1.0)
        wp = np.sort(np.linalg.eigvals(markov_matrix(Q)).real)
        wq = np.linalg.eigvalsh(symmetric_normalization(Q).values)
        np.testing.assert_allclose(wp, wq, atol=1e-10)

    def test_eigenvectors_related_by_sqrt_degree(self, rng):
        Q = rbf_kernel(rng.standard_normal((15, 2)), 1.0)
        d = degree(Q)
        w, Ut = np.linalg.eigh(symmetric_normalization(Q).values)
        U = Ut / np.sqrt(d)[:, None]
        np.testing.assert_allclose(markov_matrix(Q) @ U, U * w, atol=1e-12)

    def test_symmetric_output(self, rng):
        S = symmetric_normalization(rbf_kernel(rng.standard_normal((9, 2)), 0.6)).values
        np.testing.assert_array_equal(S, S.T)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, N=st.integers(3, 40), sigma=st.floats(0.2, 3.0))
    def test_spectra_property(self, seed, N, sigma):
        Q = rbf_kernel(np.random.default_rng(seed).standard_normal((N, 2)), sigma)
        wp = np.sort(np.linalg.eigvals(markov_matrix(Q)).real)
        wq = np.linalg.eigvalsh(symmetric_normalization(Q).values)
        np.testing.assert_allclose(wp, wq, atol=1e-10)
        assert np.all(np.abs(wq) <= 1 + 1e-12)
        assert wq[-1] == pytest.approx(1.0, abs=1e-12)


class TestLaplacian:
    def test_single_edge(self):
        w = 0.3
        L = combinatorial_laplacian([[0.0, w], [w, 0.0]]).values
        np.testing.assert_array_equal(L, [[w, -w], [-w, w]])
        np.testing.assert_array_equal(L @ np.ones(2), 0.0)

    def test_random_graph_psd_with_constant_null_vector(self, rng):
        X = rng.standard_normal((40, 2))
        G = knn_graph_kernel(X, 6, 1.0)
        L = combinatorial_laplacian(G).values
        w, V = np.linalg.eigh(L)
        assert w[0] >= -1e-10
        assert abs(w[0]) <= 1e-12 * np.max(np.diag(L))
        assert w[1] > 1e-8
        np.testing.assert_allclose(np.abs(V[:, 0]), 1 / np.sqrt(40), atol=1e-8)
        assert np.max(np.abs(L @ np.ones(40))) <= 1e-12 * np.max(np.diag(L))


class TestCovarianceAndGram:
    def test_symmetric_samples_already_centred(self):
        X = np.array([[1.0, 2.0], [-1.0, -2.0], [3.0, 0.5], [-3.0, -0.5]])
        np.testing.assert_allclose(covariance_kernel(X).values, X.T @ X)

    def test_one_dimensional(self, rng):
        x = rng.standard_normal(11)
        Q = covariance_kernel(x[:, None]).values
        assert Q.shape == (1, 1)
        assert Q.item() == pytest.approx(np.sum((x - x.mean()) ** 2))

    def test_rank_after_centring(self, rng):
        X = rng.standard_normal((4, 7))
        w = np.linalg.eigvalsh(covariance_kernel(X).values)
        assert np.sum(w > 1e-10 * w.max()) == 3

    def test_gram_examples(self, rng):
        U = np.linalg.qr(rng.standard_normal((5, 5)))[0]
        np.testing.assert_allclose(gram_kernel(U).values, np.eye(5), atol=1e-14)
        X = rng.standard_normal((4, 3))
        X[3] = X[1]
        G = gram_kernel(X).values
        np.testing.assert_array_equal(G[3], G[1])
        naive = np.array([[sum(X[i] * X[j]) for j in range(4)] for i in range(4)])
        np.testing.assert_allclose(G, naive, rtol=1e-14)
