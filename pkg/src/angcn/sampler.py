"""Pre-training subgraph sampling and aggregator-normalization statistics.

Uniform node samples drawn before training yield appearance counts C_i and
C_ij; their ratio gives the per-edge normalization constants that debias
subgraph-restricted aggregation. Counts for the synthetic self-loop entry
(i, i) always equal C_i, so the self term is never rescaled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetOutOfRange, EmptyStats, ForeignSample
from .graph_core import Graph


@dataclass(frozen=True)
class SubgraphSample:
    """A node-induced subgraph: sorted node tuple plus the induced edges."""

    nodes: tuple[int, ...]
    induced_edges: tuple[tuple[int, int], ...]


@dataclass
class AggregationStats:
    """Appearance counts over sampler runs.

    node_counts[i] = number of samples containing node i; edge_counts maps
    each (i, j) edge of the parent graph, plus one (i, i) entry per node, to
    the number of samples whose induced subgraph contains it.
    """

    runs: int
    node_counts: np.ndarray
    edge_counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "runs": self.runs,
            "node_counts": [int(c) for c in self.node_counts],
            "edge_counts": [
                [i, j, int(c)] for (i, j), c in sorted(self.edge_counts.items())
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AggregationStats":
        payload = json.loads(text)
        return cls(
            runs=payload["runs"],
            node_counts=np.array(payload["node_counts"], dtype=int),
            edge_counts={(i, j): c for i, j, c in payload["edge_counts"]},
        )


def sample_node_subgraph(g: Graph, budget: int, rng: np.random.Generator) -> SubgraphSample:
    """Uniformly sample `budget` distinct nodes and take the induced edges."""
    if not 1 <= budget <= g.n:
        raise BudgetOutOfRange(f"budget must be in [1, {g.n}], got {budget}")
    nodes = np.sort(rng.choice(g.n, size=budget, replace=False))
    chosen = set(int(v) for v in nodes)
    induced = tuple((i, j) for i, j, _ in g.edges if i in chosen and j in chosen)
    return SubgraphSample(nodes=tuple(int(v) for v in nodes), induced_edges=induced)


def accumulate_counts(g: Graph, samples: list[SubgraphSample]) -> AggregationStats:
    """Tally node and edge appearance counts over a list of samples."""
    node_counts = np.zeros(g.n, dtype=int)
    edge_counts = {(i, j): 0 for i, j, _ in g.edges}
    for s in samples:
        for v in s.nodes:
            if not 0 <= v < g.n:
                raise ForeignSample(f"sample references node {v}, graph has n={g.n}")
        chosen = set(s.nodes)
        for v in chosen:
            node_counts[v] += 1
        for i, j, _ in g.edges:
            if i in chosen and j in chosen:
                edge_counts[(i, j)] += 1
    for v in range(g.n):
        edge_counts[(v, v)] = int(node_counts[v])
    return AggregationStats(runs=len(samples), node_counts=node_counts, edge_counts=edge_counts)


def aggregation_matrix(stats: AggregationStats, g: Graph) -> np.ndarray:
    """Per-edge normalization constants gamma_ij = C_i / C_ij on the support of A + I.

    Row-wise by construction, hence generally asymmetric: gamma_ij divides by
    C_i while gamma_ji divides by C_j. Never-sampled edges clamp the
    denominator to 1 so the support of the diffusion operator is preserved.
    Diagonal entries are exactly 1 for every node that was sampled at least
    once (C_ii = C_i).
    """
    if stats.runs < 1:
        raise EmptyStats("aggregation statistics need at least one sampler run")
    gamma = np.zeros((g.n, g.n))
    c = stats.node_counts.astype(float)
    for i, j, _ in g.edges:
        cij = max(stats.edge_counts.get((i, j), 0), 1)
        gamma[i, j] = c[i] / cij
        gamma[j, i] = c[j] / cij
    for v in range(g.n):
        gamma[v, v] = c[v] / max(c[v], 1.0)
    return gamma


def ones_gamma(g: Graph) -> np.ndarray:
    """The exhaustive-sampling aggregation matrix: 1 on the support of A + I.

    This is what the counts collapse to when every run samples the whole
    graph, and it is the correct constant whenever aggregation is never
    restricted to a subgraph (full-batch training).
    """
    gamma = np.zeros((g.n, g.n))
    for i, j, _ in g.edges:
        gamma[i, j] = 1.0
        gamma[j, i] = 1.0
    np.fill_diagonal(gamma, 1.0)
    return gamma


def presample(g: Graph, runs: int, budget: int, seed: int) -> tuple[AggregationStats, list[SubgraphSample]]:
    """Run the sampler `runs` times with per-run derived seeds and tally counts.

    Run r uses default_rng([seed, r]), so runs are independent and the result
    does not depend on execution order.
    """
    samples = [
        sample_node_subgraph(g, budget, np.random.default_rng([seed, r]))
        for r in range(runs)
    ]
    return accumulate_counts(g, samples), samples


def minibatches(samples: list[SubgraphSample], batch_budget: int) -> list[np.ndarray]:
    """One training batch per sample, in order, truncated to batch_budget nodes.

    Full-batch mode is the degenerate case: pass a single exhaustive sample
    and the one batch is the full node set.
    """
    batches = []
    for s in samples:
        nodes = np.array(s.nodes[:batch_budget], dtype=int)
        batches.append(nodes)
    return batches
