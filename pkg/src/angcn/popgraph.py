"""Population graph construction from features and phenotypic measures.

Edge weights combine a correlation-distance kernel over per-subject feature
vectors with indicator distances over non-imaging measures (gender-like
categories, age-like thresholded numbers). Also hosts the connectome-style
feature pipeline: Fisher z-transform of correlation matrices and ridge-based
recursive feature elimination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateVector,
    NonPositiveSigma,
    OutOfRange,
    ShapeMismatch,
    SingularSystem,
)
from .graph_core import Graph

QUALITATIVE = "qualitative"
QUANTITATIVE = "quantitative"


@dataclass(frozen=True)
class PhenotypicMeasure:
    """One non-imaging measure with a value per subject.

    Qualitative measures compare by equality; quantitative measures compare
    by |difference| < tau.
    """

    name: str
    kind: str
    values: tuple = field(default_factory=tuple)
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in (QUALITATIVE, QUANTITATIVE):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(self.values))
        if self.kind == QUANTITATIVE:
            if self.tau is None or self.tau <= 0:
                raise ValueError(f"quantitative measure {self.name!r} needs tau > 0")

    def distance(self, i: int, j: int) -> float:
        """Indicator similarity-distance between subjects i and j (0 or 1)."""
        if self.kind == QUALITATIVE:
            return 1.0 if self.values[i] == self.values[j] else 0.0
        return 1.0 if abs(self.values[i] - self.values[j]) < self.tau else 0.0


@dataclass
class PopulationGraphSpec:
    """Inputs for adjacency construction: N x F features, measures, kernel width.

    sigma=None selects the median heuristic (median of all pairwise
    correlation distances).
    """

    features: np.ndarray
    measures: list[PhenotypicMeasure]
    sigma: float | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        n = self.features.shape[0]
        for m in self.measures:
            if len(m.values) != n:
                raise ValueError(
                    f"measure {m.name!r} covers {len(m.values)} subjects, expected {n}"
                )
        if self.sigma is not None and self.sigma <= 0:
            raise NonPositiveSigma(f"sigma must be > 0, got {self.sigma}")


def correlation_distance(x_i: np.ndarray, x_j: np.ndarray) -> float:
    """1 - Pearson correlation between two feature vectors; in [0, 2]."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape or x_i.ndim != 1 or x_i.size < 2:
        raise ShapeMismatch(
            f"need two equal-length 1-D vectors of size >= 2, got {x_i.shape} and {x_j.shape}"
        )
    di = x_i - x_i.mean()
    dj = x_j - x_j.mean()
    ni = np.sqrt(np.dot(di, di))
    nj = np.sqrt(np.dot(dj, dj))
    if ni == 0.0 or nj == 0.0:
        raise DegenerateVector("constant feature vector has undefined correlation")
    return 1.0 - float(np.dot(di, dj) / (ni * nj))


def kernel_similarity(rho: float, sigma: float) -> float:
    """Gaussian kernel exp(-rho^2 / (2 sigma^2)); in (0, 1]."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    return math.exp(-(rho * rho) / (2.0 * sigma * sigma))


def phenotypic_distance(m: PhenotypicMeasure, i: int, j: int) -> float:
    """Indicator distance for one measure (1 = similar, 0 = dissimilar)."""
    return m.distance(i, j)


def auto_sigma(features: np.ndarray) -> float:
    """Median of all pairwise correlation distances (median heuristic)."""
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    rhos = [
        correlation_distance(features[i], features[j])
        for i in range(n)
        for j in range(i + 1, n)
    ]
    return float(np.median(rhos))


def build_adjacency(spec: PopulationGraphSpec) -> Graph:
    """Weighted population graph: A_ij = K(i,j) * sum_t d(M_t(i), M_t(j)).

    Symmetric with zero diagonal; pairs whose phenotypic sum is zero get no
    edge. Raises DegenerateVector naming the offending subject if a feature
    row is constant.
    """
    x = spec.features
    n = x.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 subjects, got {n}")
    if not spec.measures:
        raise ValueError("need at least one phenotypic measure")
    for i in range(n):
        if np.ptp(x[i]) == 0.0:
            raise DegenerateVector(f"subject {i} has a constant feature vector")
    sigma = spec.sigma if spec.sigma is not None else auto_sigma(x)
    if sigma <= 0:
        raise NonPositiveSigma(f"resolved sigma must be > 0, got {sigma}")
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            pheno = sum(m.distance(i, j) for m in spec.measures)
            if pheno == 0.0:
                continue
            rho = correlation_distance(x[i], x[j])
            w = kernel_similarity(rho, sigma) * pheno
            if w > 0.0:
                edges.append((i, j, w))
    return Graph(n=n, edges=tuple(edges))


def connectome_features(corr: np.ndarray) -> np.ndarray:
    """Fisher z-transform of the strict upper triangle, vectorized row-wise.

    Input is a symmetric correlation matrix with unit diagonal and
    off-diagonal entries strictly inside (-1, 1); output has length
    n(n-1)/2.
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ShapeMismatch(f"correlation matrix must be square, got {corr.shape}")
    iu = np.triu_indices(corr.shape[0], k=1)
    upper = corr[iu]
    if np.any(np.abs(upper) >= 1.0):
        bad = int(np.argmax(np.abs(upper) >= 1.0))
        raise OutOfRange(
            f"off-diagonal correlation at flat index {bad} is {upper[bad]}, needs |r| < 1"
        )
    return np.arctanh(upper)


def triangle_to_matrix(vec: np.ndarray, n: int) -> np.ndarray:
    """Inverse of connectome_features up to the z-transform: rebuilds the
    symmetric z-matrix with zero diagonal from a row-wise triangle vector."""
    vec = np.asarray(vec, dtype=float)
    out = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    out[iu] = vec
    return out + out.T


def rfe_ridge(
    features: np.ndarray,
    labels: Sequence[float],
    target_dim: int,
    lam: float = 1.0,
    step: int | None = None,
) -> np.ndarray:
    """Recursive feature elimination with a closed-form ridge fit.

    Repeatedly solves (X^T X + lam I) w = X^T y on the surviving columns and
    drops the `step` columns with smallest |w| (ties drop the lower column
    index first) until target_dim remain. step=None removes 10% of the
    surviving columns per round, at least one. Returns the surviving column
    indices in ascending order.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    n, f = x.shape
    if y.shape != (n,):
        raise ShapeMismatch(f"labels shape {y.shape} does not match {n} rows")
    if not 0 < target_dim <= f:
        raise ValueError(f"target_dim must be in [1, {f}], got {target_dim}")
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    remaining = list(range(f))
    while len(remaining) > target_dim:
        xs = x[:, remaining]
        gram = xs.T @ xs + lam * np.eye(len(remaining))
        try:
            w = np.linalg.solve(gram, xs.T @ y)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"ridge system singular at lam={lam}") from exc
        k = step if step is not None else max(1, len(remaining) // 10)
        k = min(k, len(remaining) - target_dim)
        drop = set(elimination_order(w, remaining)[:k])
        remaining = [c for c in remaining if c not in drop]
    return np.array(remaining, dtype=int)


def elimination_order(weights, columns) -> list[int]:
    """Columns sorted by |weight| ascending; exact ties break toward the
    lower column index, so elimination is fully deterministic."""
    order = np.lexsort((columns, np.abs(np.asarray(weights, dtype=float))))
    return [columns[i] for i in order]
