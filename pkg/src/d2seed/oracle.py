"""Brute-force references: exact D^2 distributions, exact costs, optimal clusterings.

Everything here is written for transparency over speed and is independent of
the tree/rejection machinery it is used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DataSet

BRUTE_FORCE_MAX_POINTS = 14
BRUTE_FORCE_MAX_K = 3


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over point indices 0..n-1."""

    probs: np.ndarray

    @property
    def support_size(self) -> int:
        return self.probs.shape[0]

    def sample(self, rng: np.random.Generator) -> int:
        u = rng.random() * self.probs.sum()
        return int(np.searchsorted(np.cumsum(self.probs), u, side="right"))


def _as_center_array(centers, n_dims: int) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if arr.shape[1] != n_dims:
        raise ValueError(f"centers have {arr.shape[1]} dims, dataset has {n_dims}")
    return arr


def exact_d2_weights(ds: DataSet, centers) -> np.ndarray:
    """min_c ||v_i - c||^2 for every row, one center at a time."""
    centers = _as_center_array(centers, ds.n_dims)
    best = None
    for c in centers:
        diff = ds.values - c
        d2 = np.einsum("ij,ij->i", diff, diff)
        best = d2 if best is None else np.minimum(best, d2)
    return best


def exact_d2_distribution(ds: DataSet, centers) -> DiscreteDistribution:
    """The D^2 distribution: pick row i with probability min-dist^2 / total."""
    w = exact_d2_weights(ds, centers)
    total = math.fsum(w.tolist())
    if total <= 0.0:
        raise ValueError("D^2 distribution undefined: every point coincides with a center")
    return DiscreteDistribution(probs=w / total)


def exact_cost(ds: DataSet, centers) -> float:
    """Sum of squared distances to the closest center, compensated summation."""
    w = exact_d2_weights(ds, centers)
    return math.fsum(w.tolist())


def _partition_cost(values: np.ndarray, labels: np.ndarray, k: int) -> float:
    total = 0.0
    for j in range(k):
        block = values[labels == j]
        mu = block.mean(axis=0)
        diff = block - mu
        total += float(np.einsum("ij,ij->", diff, diff))
    return total


def optimal_kmeans_bruteforce(
    ds: DataSet,
    k: int,
    max_points: int = BRUTE_FORCE_MAX_POINTS,
    max_k: int = BRUTE_FORCE_MAX_K,
) -> tuple[float, np.ndarray]:
    """Exact k-means optimum by enumerating all partitions into k nonempty blocks.

    Assignments are generated in canonical (first-occurrence) label order so
    each partition is visited exactly once. Guarded by hard size caps.
    """
    n = ds.n_points
    if n > max_points or k > max_k:
        raise ValueError(
            f"brute force capped at {max_points} points / k={max_k}, got n={n}, k={k}"
        )
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")

    values = ds.values
    labels = np.zeros(n, dtype=np.int64)
    best_cost = math.inf
    best_labels = None

    def recurse(i: int, used: int):
        nonlocal best_cost, best_labels
        if k - used > n - i:
            return  # not enough points left to fill every block
        if i == n:
            if used == k:
                cost = _partition_cost(values, labels, k)
                if cost < best_cost:
                    best_cost = cost
                    best_labels = labels.copy()
            return
        top = min(used + 1, k)
        for lab in range(top):
            labels[i] = lab
            recurse(i + 1, max(used, lab + 1))

    recurse(0, 0)
    return best_cost, best_labels


def tv_distance(p, q) -> float:
    """Total variation distance between two aligned probability vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def empirical_distribution(samples, n_bins: int) -> DiscreteDistribution:
    """Normalized histogram of integer samples over bins 0..n_bins-1."""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        raise ValueError("no samples")
    if samples.min() < 0 or samples.max() >= n_bins:
        raise ValueError("sample outside bin range")
    counts = np.bincount(samples, minlength=n_bins).astype(np.float64)
    return DiscreteDistribution(probs=counts / counts.sum())
