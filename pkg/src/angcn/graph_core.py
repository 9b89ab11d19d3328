"""Dense matrix primitives and graph normalization.

Matrices are plain float64 numpy arrays in row-major order; n stays small
(hundreds of nodes), so everything is dense and exact reproducibility wins
over sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch, ZeroDegree

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph over nodes 0..n-1.

    Edges are stored once with i < j and weight >= 0; self-loops are never
    stored (they are added explicitly where the math needs them).
    """

    n: int
    edges: tuple[Edge, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n}")
        object.__setattr__(self, "edges", tuple(self.edges))
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) is not 0 <= i < j < {self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if w < 0:
                raise ValueError(f"edge ({i}, {j}) has negative weight {w}")
            seen.add((i, j))

    def adjacency(self) -> np.ndarray:
        """Dense symmetric adjacency matrix A with zero diagonal."""
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a


def add_self_loops(g: Graph) -> np.ndarray:
    """A + I: the adjacency matrix with a unit self-loop on every node."""
    return g.adjacency() + np.eye(g.n)


def normalize_adjacency(a_tilde: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization D^{-1/2} (A + I) D^{-1/2}.

    Computed as an elementwise scaling by 1/sqrt(d_i d_j), so the output is
    exactly symmetric whenever the input is. Spectral radius is <= 1.
    """
    a_tilde = np.asarray(a_tilde, dtype=float)
    _check_2d(a_tilde)
    if a_tilde.shape[0] != a_tilde.shape[1]:
        raise ShapeMismatch(f"adjacency must be square, got {a_tilde.shape}")
    degrees = a_tilde.sum(axis=1)
    if np.any(degrees <= 0):
        bad = int(np.argmin(degrees))
        raise ZeroDegree(f"row {bad} has degree {degrees[bad]}; add self-loops first")
    return a_tilde / np.sqrt(np.outer(degrees, degrees))


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two equally shaped matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"hadamard needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_2d(a)
    _check_2d(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def support_mask(g: Graph) -> np.ndarray:
    """0/1 matrix marking the support of A + I (edges plus the diagonal)."""
    return (add_self_loops(g) > 0).astype(float)


def _check_2d(m: np.ndarray) -> None:
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got ndim={m.ndim}")
