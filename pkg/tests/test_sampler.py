import numpy as np
import pytest

from angcn.errors import BudgetOutOfRange, EmptyStats, ForeignSample
from angcn.graph_core import Graph, add_self_loops, normalize_adjacency
from angcn.sampler import (
    AggregationStats,
    SubgraphSample,
    accumulate_counts,
    aggregation_matrix,
    minibatches,
    ones_gamma,
    presample,
    sample_node_subgraph,
)


def path_graph(n):
    return Graph(n=n, edges=tuple((i, i + 1, 1.0) for i in range(n - 1)))


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < p:
                edges.append((i, j, float(rng.uniform(0.5, 2.0))))
    return Graph(n=n, edges=tuple(edges))


class TestSampleNodeSubgraph:
    def test_exhaustive_budget(self):
        g = path_graph(5)
        s = sample_node_subgraph(g, budget=5, rng=np.random.default_rng(0))
        assert s.nodes == (0, 1, 2, 3, 4)
        assert set(s.induced_edges) == {(i, j) for i, j, _ in g.edges}

    def test_budget_one_has_no_edges(self):
        s = sample_node_subgraph(path_graph(4), budget=1, rng=np.random.default_rng(1))
        assert len(s.nodes) == 1
        assert s.induced_edges == ()

    def test_fixed_seed_is_deterministic(self):
        g = path_graph(5)
        a = sample_node_subgraph(g, budget=3, rng=np.random.default_rng(77))
        b = sample_node_subgraph(g, budget=3, rng=np.random.default_rng(77))
        assert a == b

    def test_budget_out_of_range(self):
        with pytest.raises(BudgetOutOfRange):
            sample_node_subgraph(path_graph(3), budget=0, rng=np.random.default_rng(0))
        with pytest.raises(BudgetOutOfRange):
            sample_node_subgraph(path_graph(3), budget=4, rng=np.random.default_rng(0))

    def test_induced_edges_match_parent_graph(self):
        g = random_graph(8, 0.5, seed=2)
        for seed in range(10):
            s = sample_node_subgraph(g, budget=4, rng=np.random.default_rng(seed))
            chosen = set(s.nodes)
            expected = {(i, j) for i, j, _ in g.edges if i in chosen and j in chosen}
            assert set(s.induced_edges) == expected


class TestAccumulateCounts:
    def test_exhaustive_runs_count_everything(self):
        g = path_graph(4)
        samples = [
            sample_node_subgraph(g, budget=4, rng=np.random.default_rng(r)) for r in range(7)
        ]
        stats = accumulate_counts(g, samples)
        assert stats.runs == 7
        assert np.all(stats.node_counts == 7)
        for i, j, _ in g.edges:
            assert stats.edge_counts[(i, j)] == 7

    def test_zero_runs(self):
        stats = accumulate_counts(path_graph(3), [])
        assert stats.runs == 0
        assert np.all(stats.node_counts == 0)

    def test_hand_tally_fixture(self):
        # path 0-1-2-3; three hand-listed samples
        g = path_graph(4)
        samples = [
            SubgraphSample(nodes=(0, 1), induced_edges=((0, 1),)),
            SubgraphSample(nodes=(1, 2, 3), induced_edges=((1, 2), (2, 3))),
            SubgraphSample(nodes=(0, 2, 3), induced_edges=((2, 3),)),
        ]
        stats = accumulate_counts(g, samples)
        assert stats.node_counts.tolist() == [2, 2, 2, 2]
        assert stats.edge_counts[(0, 1)] == 1
        assert stats.edge_counts[(1, 2)] == 1
        assert stats.edge_counts[(2, 3)] == 2
        # synthetic self-loop entries mirror the node counts
        for v in range(4):
            assert stats.edge_counts[(v, v)] == stats.node_counts[v]

    def test_foreign_sample(self):
        g = path_graph(3)
        bad = SubgraphSample(nodes=(0, 5), induced_edges=())
        with pytest.raises(ForeignSample):
            accumulate_counts(g, [bad])

    def test_counts_monotone_under_appending(self):
        g = random_graph(6, 0.5, seed=4)
        samples = [
            sample_node_subgraph(g, budget=3, rng=np.random.default_rng(r)) for r in range(20)
        ]
        prev = accumulate_counts(g, samples[:10])
        more = accumulate_counts(g, samples)
        assert np.all(more.node_counts >= prev.node_counts)
        for key, count in prev.edge_counts.items():
            assert more.edge_counts[key] >= count


class TestAggregationMatrix:
    def test_exhaustive_sampling_collapses_to_ones(self):
        g = path_graph(4)
        samples = [
            sample_node_subgraph(g, budget=4, rng=np.random.default_rng(r)) for r in range(5)
        ]
        gamma = aggregation_matrix(accumulate_counts(g, samples), g)
        assert np.array_equal(gamma, ones_gamma(g))

    def test_ratio_substitution(self):
        g = Graph(n=2, edges=((0, 1, 1.0),))
        stats = AggregationStats(
            runs=10,
            node_counts=np.array([10, 8]),
            edge_counts={(0, 1): 5, (0, 0): 10, (1, 1): 8},
        )
        gamma = aggregation_matrix(stats, g)
        assert gamma[0, 1] == 2.0          # 10 / 5
        assert gamma[1, 0] == pytest.approx(8.0 / 5.0)
        assert gamma[0, 0] == 1.0
        assert gamma[1, 1] == 1.0

    def test_empty_stats(self):
        g = path_graph(3)
        with pytest.raises(EmptyStats):
            aggregation_matrix(accumulate_counts(g, []), g)

    def test_unit_diagonal_and_support(self):
        g = random_graph(10, 0.4, seed=6)
        stats, _ = presample(g, runs=60, budget=5, seed=1)
        gamma = aggregation_matrix(stats, g)
        assert np.all(np.diag(gamma) == 1.0)
        support = (add_self_loops(g) > 0)
        assert np.all(gamma[~support] == 0.0)
        off = [(i, j) for i, j, _ in g.edges]
        for i, j in off:
            if stats.edge_counts[(i, j)] >= 1:
                assert gamma[i, j] >= 1.0
                assert gamma[j, i] >= 1.0

    def test_never_sampled_edge_clamps_denominator(self):
        g = Graph(n=3, edges=((0, 1, 1.0), (1, 2, 1.0)))
        stats = AggregationStats(
            runs=4,
            node_counts=np.array([4, 2, 0]),
            edge_counts={(0, 1): 2, (1, 2): 0, (0, 0): 4, (1, 1): 2, (2, 2): 0},
        )
        gamma = aggregation_matrix(stats, g)
        assert gamma[1, 2] == 2.0          # C_1 / max(0, 1)
        assert gamma[2, 1] == 0.0          # C_2 = 0
        assert gamma[2, 2] == 0.0          # never-sampled node


class TestUnbiasedness:
    def test_normalized_subgraph_aggregation_matches_full_graph(self):
        # Monte-Carlo oracle: average the gamma-weighted, subgraph-masked
        # aggregation over the same seeded runs that defined the counts,
        # per-node normalized by the node's appearance count.
        g = random_graph(20, 0.3, seed=123)
        a_hat = normalize_adjacency(add_self_loops(g))
        rng = np.random.default_rng(5)
        h = rng.normal(size=(20, 6))
        stats, samples = presample(g, runs=5000, budget=10, seed=99)
        gamma = aggregation_matrix(stats, g)
        op = a_hat * gamma
        total = np.zeros_like(h)
        for s in samples:
            nodes = np.array(s.nodes)
            mask = np.zeros((20, 20))
            mask[np.ix_(nodes, nodes)] = 1.0
            total += (op * mask) @ h
        est = total / np.maximum(stats.node_counts[:, None], 1)
        ref = a_hat @ h
        rel = np.linalg.norm(est - ref) / np.linalg.norm(ref)
        assert rel < 0.02

    def test_split_runs_still_approximately_unbiased(self):
        # harsher variant: gamma from one batch of runs, averaging over an
        # independent batch; only statistically unbiased, so the bound is loose
        g = random_graph(20, 0.3, seed=123)
        a_hat = normalize_adjacency(add_self_loops(g))
        h = np.random.default_rng(5).normal(size=(20, 6))
        stats_a, _ = presample(g, runs=4000, budget=10, seed=1)
        op = a_hat * aggregation_matrix(stats_a, g)
        stats_b, samples_b = presample(g, runs=4000, budget=10, seed=2)
        total = np.zeros_like(h)
        for s in samples_b:
            nodes = np.array(s.nodes)
            mask = np.zeros((20, 20))
            mask[np.ix_(nodes, nodes)] = 1.0
            total += (op * mask) @ h
        est = total / np.maximum(stats_b.node_counts[:, None], 1)
        ref = a_hat @ h
        assert np.linalg.norm(est - ref) / np.linalg.norm(ref) < 0.10


class TestDeterminismAndExport:
    def test_same_seed_same_stats(self):
        g = random_graph(9, 0.4, seed=0)
        a, _ = presample(g, runs=30, budget=4, seed=21)
        b, _ = presample(g, runs=30, budget=4, seed=21)
        assert np.array_equal(a.node_counts, b.node_counts)
        assert a.edge_counts == b.edge_counts

    def test_json_round_trip(self):
        g = random_graph(7, 0.5, seed=8)
        stats, _ = presample(g, runs=25, budget=3, seed=3)
        back = AggregationStats.from_json(stats.to_json())
        assert back.runs == stats.runs
        assert np.array_equal(back.node_counts, stats.node_counts)
        assert back.edge_counts == stats.edge_counts


class TestMinibatches:
    def test_single_exhaustive_sample_is_full_batch(self):
        g = path_graph(6)
        s = sample_node_subgraph(g, budget=6, rng=np.random.default_rng(0))
        batches = minibatches([s], batch_budget=6)
        assert len(batches) == 1
        assert batches[0].tolist() == [0, 1, 2, 3, 4, 5]

    def test_budget_n_every_batch_is_full(self):
        g = path_graph(4)
        samples = [
            sample_node_subgraph(g, budget=4, rng=np.random.default_rng(r)) for r in range(3)
        ]
        for batch in minibatches(samples, batch_budget=4):
            assert batch.tolist() == [0, 1, 2, 3]

    def test_order_preserving_bijection(self):
        g = random_graph(8, 0.4, seed=1)
        samples = [
            sample_node_subgraph(g, budget=3, rng=np.random.default_rng(r)) for r in range(3)
        ]
        batches = minibatches(samples, batch_budget=3)
        assert len(batches) == 3
        for s, batch in zip(samples, batches):
            assert batch.tolist() == list(s.nodes)
