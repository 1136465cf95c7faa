"""Nonlinear 3-d embedding of appearance vectors, UMAP-style.

The stages are the classic ones: exact k-nearest-neighbour graph, per-point
bandwidth calibration so each point's membership mass hits log2(k), fuzzy
union symmetrization, then stochastic gradient descent on the low-d layout
with weight-proportional edge sampling and uniform negative samples.

Everything is deterministic for a fixed config: neighbour ties break to
the lower index, the layout starts from a seeded uniform init, and the
descent kernel (numba-compiled, single threaded) seeds its own generator.
Two runs on the same input produce byte-identical embeddings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

from .errors import ConfigError, InsufficientDataError, NumericError

N_COMPONENTS = 3  # output dimensionality is fixed

SMOOTH_K_TOLERANCE = 1e-5
MIN_SIGMA = 1e-3
_BANDWIDTH_ITERS = 64


@dataclass(frozen=True)
class UmapConfig:
    """Neighbourhood size, layout shape, and descent schedule."""

    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int = 200
    negative_sample_rate: int = 5
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ConfigError(f"n_neighbors must be at least 2, got {self.n_neighbors}")
        if self.min_dist <= 0:
            raise ConfigError(f"min_dist must be positive, got {self.min_dist}")
        if self.spread < self.min_dist:
            raise ConfigError("spread must be at least min_dist")
        if self.n_epochs < 1:
            raise ConfigError(f"n_epochs must be at least 1, got {self.n_epochs}")
        if self.negative_sample_rate < 1:
            raise ConfigError("negative_sample_rate must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")


def knn_graph(data: np.ndarray, n_neighbors: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k-nearest neighbours by brute force.

    Returns (indices, distances), each (n, k), neighbours in ascending
    distance order with ties broken toward the lower index. The point
    itself is excluded.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ConfigError(f"expected a 2-d array, got shape {data.shape}")
    n = data.shape[0]
    if n_neighbors < 1:
        raise ConfigError(f"n_neighbors must be positive, got {n_neighbors}")
    if n <= n_neighbors:
        raise InsufficientDataError(
            f"need more than n_neighbors={n_neighbors} points, got {n}"
        )
    if not np.all(np.isfinite(data)):
        raise NumericError("input contains non-finite values")

    sq = np.sum(data * data, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (data @ data.T)
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :n_neighbors]
    dists = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return order, dists


def smooth_knn_bandwidths(distances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (sigma, rho) so membership mass sums to log2(k).

    rho is the distance to the nearest neighbour; sigma is found by
    binary search on sum_j exp(-max(0, d_j - rho) / sigma) = log2(k),
    floored at MIN_SIGMA.
    """
    n, k = distances.shape
    target = math.log2(k)
    sigmas = np.empty(n)
    rhos = distances[:, 0].copy()
    for i in range(n):
        shifted = np.maximum(distances[i] - rhos[i], 0.0)
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(_BANDWIDTH_ITERS):
            value = np.exp(-shifted / mid).sum()
            if abs(value - target) < SMOOTH_K_TOLERANCE:
                break
            if value > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigmas[i] = max(mid, MIN_SIGMA)
    return sigmas, rhos


def fuzzy_graph(
    data: np.ndarray, n_neighbors: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Symmetric fuzzy neighbourhood graph.

    Directed memberships w(i->j) = exp(-max(0, d - rho_i) / sigma_i) are
    combined by fuzzy union w_ij = a + b - a*b and each undirected edge is
    stored once with i < j, so symmetry is exact by construction.

    Returns (heads, tails, weights) with heads[e] < tails[e].
    """
    indices, dists = knn_graph(data, n_neighbors)
    sigmas, rhos = smooth_knn_bandwidths(dists)

    directed: dict[tuple[int, int], float] = {}
    n = indices.shape[0]
    for i in range(n):
        for col in range(indices.shape[1]):
            j = int(indices[i, col])
            w = math.exp(-max(0.0, dists[i, col] - rhos[i]) / sigmas[i])
            directed[(i, j)] = w

    undirected: dict[tuple[int, int], float] = {}
    for (i, j), a in directed.items():
        key = (i, j) if i < j else (j, i)
        if key in undirected:
            continue
        b = directed.get((j, i), 0.0)
        undirected[key] = a + b - a * b

    keys = sorted(undirected)
    heads = np.array([k[0] for k in keys], dtype=np.int64)
    tails = np.array([k[1] for k in keys], dtype=np.int64)
    weights = np.array([undirected[k] for k in keys])
    return heads, tails, weights


def find_ab_params(spread: float, min_dist: float) -> tuple[float, float]:
    """Fit the smooth kernel 1 / (1 + a d^(2b)) to the target falloff."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    """How many epochs between samples of each edge (heaviest every epoch)."""
    return weights.max() / weights


@njit(cache=True)
def _clip(value):
    if value > 4.0:
        return 4.0
    if value < -4.0:
        return -4.0
    return value


@njit(cache=True)
def _descend(
    embedding,
    head,
    tail,
    n_epochs,
    n_vertices,
    epochs_per_sample,
    a,
    b,
    seed,
    initial_alpha,
    negative_sample_rate,
):
    dim = embedding.shape[1]
    np.random.seed(seed)
    epochs_per_negative_sample = epochs_per_sample / negative_sample_rate
    epoch_of_next_sample = epochs_per_sample.copy()
    epoch_of_next_negative_sample = epochs_per_negative_sample.copy()

    for epoch in range(n_epochs):
        alpha = initial_alpha * (1.0 - epoch / n_epochs)
        for e in range(epochs_per_sample.shape[0]):
            if epoch_of_next_sample[e] > epoch:
                continue
            j = head[e]
            k = tail[e]
            current = embedding[j]
            other = embedding[k]

            dist_squared = 0.0
            for d in range(dim):
                diff = current[d] - other[d]
                dist_squared += diff * diff
            if dist_squared > 0.0:
                grad_coeff = (-2.0 * a * b * dist_squared ** (b - 1.0)) / (
                    a * dist_squared ** b + 1.0
                )
            else:
                grad_coeff = 0.0
            for d in range(dim):
                grad_d = _clip(grad_coeff * (current[d] - other[d]))
                current[d] += grad_d * alpha
                other[d] -= grad_d * alpha

            epoch_of_next_sample[e] += epochs_per_sample[e]

            n_neg = int(
                (epoch - epoch_of_next_negative_sample[e])
                / epochs_per_negative_sample[e]
            )
            for _ in range(n_neg):
                target = np.random.randint(n_vertices)
                other = embedding[target]
                dist_squared = 0.0
                for d in range(dim):
                    diff = current[d] - other[d]
                    dist_squared += diff * diff
                if dist_squared > 0.0:
                    grad_coeff = 2.0 * b / (
                        (0.001 + dist_squared) * (a * dist_squared ** b + 1.0)
                    )
                elif j == target:
                    continue
                else:
                    grad_coeff = 0.0
                for d in range(dim):
                    if grad_coeff > 0.0:
                        grad_d = _clip(grad_coeff * (current[d] - other[d]))
                    else:
                        grad_d = 4.0
                    current[d] += grad_d * alpha
            epoch_of_next_negative_sample[e] += (
                n_neg * epochs_per_negative_sample[e]
            )
    return embedding


def umap_embed(data: np.ndarray, config: UmapConfig | None = None) -> np.ndarray:
    """Embed (n, d) vectors into 3 dimensions. Deterministic per config."""
    config = config if config is not None else UmapConfig()
    data = np.asarray(data, dtype=np.float64)

    heads, tails, weights = fuzzy_graph(data, config.n_neighbors)
    a, b = find_ab_params(config.spread, config.min_dist)

    # each undirected edge pulls from both ends, so expand both directions
    head = np.concatenate([heads, tails])
    tail = np.concatenate([tails, heads])
    eps = make_epochs_per_sample(np.concatenate([weights, weights]), config.n_epochs)

    rng = np.random.default_rng(config.seed)
    embedding = rng.uniform(-10.0, 10.0, size=(data.shape[0], N_COMPONENTS))

    embedding = _descend(
        embedding,
        head,
        tail,
        config.n_epochs,
        data.shape[0],
        eps,
        a,
        b,
        config.seed,
        config.learning_rate,
        float(config.negative_sample_rate),
    )
    if not np.all(np.isfinite(embedding)):
        raise NumericError("layout optimization diverged to non-finite values")
    return embedding
