import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgatt.data import apply_missing_mask
from fgatt.errors import ConfigError, InputError
from fgatt.fuzzy_rough import Kernel
from fgatt.graph import (
    DynamicGraph,
    GraphConfig,
    batch_neighbor_indices,
    build_graph,
    construct_window_graph,
    pool_scores,
    pooled_scores_batch,
    score_at_t,
    score_matrix_at_t,
    topk_neighbors,
    window_score_tensor,
)

# Brute-force score oracle built directly from the defining min/max loops.


def brute_kernel(x, y, sigma):
    return math.exp(-sum((a - b) ** 2 for a, b in zip(x, y)) / (2.0 * sigma * sigma))


def brute_score(features, i, j, alpha, sigma):
    def lower(a, b):
        # inclusion of node a's neighbourhood in node b's similarity class
        return min(
            max(1.0 - brute_kernel(features[a], y, sigma), brute_kernel(y, features[b], sigma))
            for y in features
        )

    return alpha * lower(i, j) + (1.0 - alpha) * lower(j, i)


def brute_topk(row, i, k):
    ranked = sorted((j for j in range(len(row)) if j != i), key=lambda j: (-row[j], j))
    return ranked[: min(k, len(row) - 1)]


class TestScores:
    def test_alpha_half_is_symmetric(self):
        rng = np.random.default_rng(1)
        f = rng.uniform(-1, 1, size=(6, 2))
        s = score_matrix_at_t(f, 0.5, Kernel(1.0))
        assert np.array_equal(s, s.T)

    def test_identical_nodes_score_one(self):
        f = np.tile([0.4, -0.2], (5, 1))
        s = score_matrix_at_t(f, 0.3, Kernel(1.0))
        assert np.allclose(s, 1.0, atol=1e-15)

    def test_matches_brute_force(self):
        f = np.array([[0.0], [1.0], [2.0]])
        s = score_matrix_at_t(f, 0.5, Kernel(1.0))
        for i in range(3):
            for j in range(3):
                expected = brute_score(f, i, j, 0.5, 1.0)
                assert s[i, j] == pytest.approx(expected, abs=1e-12)
                assert score_at_t(f, i, j, 0.5, Kernel(1.0)) == pytest.approx(expected, abs=1e-12)

    @given(st.floats(0.0, 1.0, allow_nan=False), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_random_instances_match_brute_force(self, alpha, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        f = rng.uniform(-2, 2, size=(n, int(rng.integers(1, 4))))
        sigma = float(rng.uniform(0.4, 2.0))
        s = score_matrix_at_t(f, alpha, Kernel(sigma))
        for i in range(n):
            for j in range(n):
                assert s[i, j] == pytest.approx(brute_score(f, i, j, alpha, sigma), abs=1e-12)

    def test_alpha_out_of_range(self):
        with pytest.raises(ConfigError):
            score_matrix_at_t(np.zeros((3, 1)), 1.5, Kernel(1.0))


class TestPooling:
    def test_constant_scores(self):
        scores = np.full((4, 3, 3), 0.7)
        assert np.allclose(pool_scores(scores, "mean"), 0.7)
        assert np.allclose(pool_scores(scores, "max"), 0.7)

    def test_two_step_mean_and_max(self):
        scores = np.stack([np.full((2, 2), 0.2), np.full((2, 2), 0.8)])
        assert pool_scores(scores, "mean")[0, 1] == pytest.approx(0.5)
        assert pool_scores(scores, "max")[0, 1] == pytest.approx(0.8)

    def test_mean_within_bounds(self):
        rng = np.random.default_rng(3)
        scores = rng.random((5, 4, 4))
        pooled = pool_scores(scores, "mean")
        assert np.all(pooled >= scores.min(axis=0) - 1e-15)
        assert np.all(pooled <= scores.max(axis=0) + 1e-15)

    def test_empty_time_axis(self):
        with pytest.raises(InputError):
            pool_scores(np.empty((0, 3, 3)), "mean")

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            pool_scores(np.zeros((1, 2, 2)), "median")


class TestTopK:
    def test_small_n_keeps_everything(self):
        pooled = np.random.default_rng(0).random((3, 3))
        graph = build_graph(pooled, k=2)
        assert len(graph.edges) == 6
        assert sorted(graph.out_degree().tolist()) == [2, 2, 2]

    def test_argmax_row(self):
        pooled = np.array([[0.0, 0.9, 0.4], [0.1, 0.0, 0.2], [0.5, 0.3, 0.0]])
        graph = build_graph(pooled, k=1)
        assert (0, 1, 0.9) in graph.edges

    def test_ties_prefer_lower_index(self):
        pooled = np.array(
            [
                [0.0, 0.5, 0.5, 0.1],
                [0.5, 0.0, 0.2, 0.5],
                [0.3, 0.3, 0.0, 0.3],
                [1.0, 1.0, 1.0, 0.0],
            ]
        )
        nb = topk_neighbors(pooled, 2)
        assert nb[0].tolist() == [1, 2]
        assert nb[1].tolist() == [0, 3]
        assert nb[2].tolist() == [0, 1]
        assert nb[3].tolist() == [0, 1]

    @given(st.integers(1, 3), st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_matches_sort_oracle(self, k, seed):
        pooled = np.random.default_rng(seed).random((6, 6))
        nb = topk_neighbors(pooled, k)
        for i in range(6):
            assert nb[i].tolist() == brute_topk(pooled[i], i, k)

    def test_never_self_loops_and_degree_bound(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            k = int(rng.integers(1, 10))
            graph = build_graph(rng.random((n, n)), k=k)
            assert all(s != t for s, t, _ in graph.edges)
            assert np.all(graph.out_degree() == min(k, n - 1))

    def test_weights_are_pooled_scores(self):
        pooled = np.random.default_rng(4).random((5, 5))
        graph = build_graph(pooled, k=2)
        for s, t, w in graph.edges:
            assert w == pooled[s, t]

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(11)
        pooled = rng.random((6, 6))  # distinct entries, so no tie-break effects
        perm = rng.permutation(6)
        direct = build_graph(pooled[np.ix_(perm, perm)], k=2)
        reference = build_graph(pooled, k=2)
        inv = np.argsort(perm)
        remapped = {(inv[s], inv[t]) for s, t, _ in direct.edges}
        assert remapped == {(s, t) for s, t, _ in reference.edges}

    def test_mutual_top_one_is_reciprocal(self):
        pooled = np.array([[0.0, 0.9, 0.1], [0.9, 0.0, 0.2], [0.8, 0.1, 0.0]])
        edges = {(s, t) for s, t, _ in build_graph(pooled, k=1).edges}
        assert (0, 1) in edges and (1, 0) in edges

    def test_global_mode_keeps_k_total(self):
        pooled = np.random.default_rng(2).random((5, 5))
        graph = build_graph(pooled, k=4, mode="global")
        assert len(graph.edges) == 4
        flat = [(-pooled[s, t], s, t) for s in range(5) for t in range(5) if s != t]
        expected = {(s, t) for _, s, t in sorted(flat)[:4]}
        assert {(s, t) for s, t, _ in graph.edges} == expected

    def test_too_few_nodes(self):
        with pytest.raises(InputError):
            build_graph(np.zeros((1, 1)), k=1)

    def test_bad_k(self):
        with pytest.raises(ConfigError):
            build_graph(np.zeros((3, 3)), k=0)


class TestWindowGraph:
    def test_construct_window_graph(self):
        rng = np.random.default_rng(21)
        window = apply_missing_mask(rng.random((8, 5)), 0.4, 17, window_id="w0")
        cfg = GraphConfig(alpha=0.5, sigma=1.0, k=2)
        graph = construct_window_graph(window, cfg)
        assert graph.built_from == "w0"
        assert graph.node_count == 5
        pooled = pool_scores(window_score_tensor(window.values, cfg.alpha, cfg.kernel), cfg.pooling)
        assert {(s, t) for s, t, _ in graph.edges} == {
            (i, int(j)) for i in range(5) for j in topk_neighbors(pooled, 2)[i]
        }

    def test_batch_path_matches_window_path(self):
        rng = np.random.default_rng(8)
        values = rng.random((4, 6, 5))
        cfg = GraphConfig(k=3)
        pooled = pooled_scores_batch(values, cfg)
        for b in range(4):
            direct = pool_scores(window_score_tensor(values[b], cfg.alpha, cfg.kernel), cfg.pooling)
            assert np.allclose(pooled[b], direct, atol=1e-12)
        nb = batch_neighbor_indices(values, cfg)
        for b in range(4):
            assert np.array_equal(nb[b], topk_neighbors(pooled[b], cfg.k))

    def test_batch_max_pooling(self):
        rng = np.random.default_rng(12)
        values = rng.random((2, 5, 4))
        cfg = GraphConfig(k=2, pooling="max")
        pooled = pooled_scores_batch(values, cfg)
        direct = pool_scores(window_score_tensor(values[0], cfg.alpha, cfg.kernel), "max")
        assert np.allclose(pooled[0], direct, atol=1e-12)

    def test_batch_requires_per_node_mode(self):
        with pytest.raises(ConfigError):
            batch_neighbor_indices(np.zeros((1, 2, 3)), GraphConfig(k=1, topk_mode="global"))


class TestDynamicGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(InputError):
            DynamicGraph(node_count=3, edges=[(1, 1, 0.5)])

    def test_neighbor_array_roundtrip(self):
        pooled = np.random.default_rng(6).random((5, 5))
        graph = build_graph(pooled, k=3)
        assert np.array_equal(graph.neighbor_array(), topk_neighbors(pooled, 3))

    def test_csv_export(self, tmp_path):
        graph = build_graph(np.random.default_rng(7).random((4, 4)), k=1)
        path = tmp_path / "edges.csv"
        graph.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "source,target,weight"
        assert len(lines) == 1 + len(graph.edges)
        s, t, w = lines[1].split(",")
        assert (int(s), int(t), float(w)) == graph.edges[0]


class TestGraphConfig:
    @pytest.mark.parametrize("bad", [{"alpha": -0.1}, {"alpha": 1.1}, {"k": 0}, {"sigma": 0.0}, {"pooling": "sum"}])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            GraphConfig(**bad)
