"""Sampled inner products and the noisy-distance handle built on them.

For a vector a with sample-query access and a queryable vector c, the
single-draw estimator

    t ~ a(t)^2 / ||a||^2,   X = (c(t) / a(t)) * ||a||^2

has mean <a, c> and relative variance bounded by ||a||^2 ||c||^2 / <a,c>^2.
Median-of-means over (n_groups x group_size) draws turns that into an
(eps, delta) guarantee; distances then come from the polarization identity
with clamping at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .osq import OsqHandle
from .sqtree import SqMatrix, SqVector

_BATCH_DRAW_LIMIT = 1 << 22


@dataclass(frozen=True)
class IpEstimatorConfig:
    """Median-of-means schedule for inner-product estimation."""

    eps: float
    delta: float
    group_size: int
    n_groups: int

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.n_groups < 1 or self.n_groups % 2 == 0:
            raise ValueError("n_groups must be odd and >= 1")

    @staticmethod
    def from_tolerance(eps: float, delta: float, variance_bound: float) -> "IpEstimatorConfig":
        """group_size = ceil(9 B / eps^2), n_groups = 2 ceil(3 ln(1/delta)) + 1."""
        if variance_bound <= 0.0:
            raise ValueError("variance_bound must be positive")
        group_size = max(1, math.ceil(9.0 * variance_bound / (eps * eps)))
        n_groups = 2 * max(1, math.ceil(3.0 * math.log(1.0 / delta))) + 1
        return IpEstimatorConfig(eps=eps, delta=delta, group_size=group_size, n_groups=n_groups)

    @property
    def draws(self) -> int:
        return self.group_size * self.n_groups


def _vector_values(x) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return x
    if hasattr(x, "values"):
        return np.asarray(x.values, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def estimate_inner(a, c, cfg: IpEstimatorConfig, rng: np.random.Generator) -> float:
    """Estimate <a, c> from cfg.draws samples of a's squared-magnitude distribution."""
    return float(estimate_inner_batch(a, c, cfg, rng, 1)[0])


def estimate_inner_batch(
    a, c, cfg: IpEstimatorConfig, rng: np.random.Generator, count: int
) -> np.ndarray:
    """`count` independent median-of-means estimates of <a, c>."""
    a_vals = _vector_values(a)
    c_vals = _vector_values(c)
    if a_vals.shape != c_vals.shape:
        raise ValueError("vectors must have equal length")
    norm2 = a.norm2
    if norm2 <= 0.0:
        return np.zeros(count, dtype=np.float64)  # <0, c> = 0, nothing to sample
    per = cfg.draws
    out = np.empty(count, dtype=np.float64)
    chunk = max(1, _BATCH_DRAW_LIMIT // per)
    for lo in range(0, count, chunk):
        hi = min(count, lo + chunk)
        t = a.sample_batch(rng, (hi - lo) * per)
        # (c_t / a_t) first: exactly 1 whenever the vectors coincide entrywise.
        x = (c_vals[t] / a_vals[t]) * norm2
        means = x.reshape(hi - lo, cfg.n_groups, cfg.group_size).mean(axis=2)
        out[lo:hi] = np.median(means, axis=1)
    return out


def approx_distance(vi, c, cfg: IpEstimatorConfig, rng: np.random.Generator) -> float:
    """sqrt(max(0, ||vi||^2 + ||c||^2 - 2 <vi, c>-estimate))."""
    est = estimate_inner(vi, c, cfg, rng)
    d2 = vi.norm2 + c.norm2 - 2.0 * est
    return math.sqrt(max(0.0, d2))


class NoisyDistanceOsq(OsqHandle):
    """Distance-to-center handle whose true queries are sampled estimates.

    The dominating weights are the exact-distance handle's, inflated by
    (1 + eps) so that estimates within relative error eps stay dominated;
    rarer overshoots surface as clamp counts in rejection sampling.
    """

    def __init__(
        self,
        matrix: SqMatrix,
        center,
        cfg: IpEstimatorConfig,
        rng: np.random.Generator,
    ):
        self.center = center if isinstance(center, SqVector) else SqVector(center)
        if self.center.n != matrix.n_dims:
            raise ValueError("center dimension does not match the matrix")
        self.matrix = matrix
        self.cfg = cfg
        self.n = matrix.n_rows
        self._rng = rng
        self._c2 = self.center.norm2
        self._frob2 = matrix.norm2
        total = self._frob2 + self.n * self._c2
        self._p_rows = 1.0 if total <= 0.0 else self._frob2 / total
        self._inflate = 1.0 + cfg.eps
        self._norm2_tilde = (self._inflate**2) * 2.0 * total

    @property
    def norm2_tilde(self) -> float:
        return self._norm2_tilde

    def sample_tilde(self, rng):
        if self._norm2_tilde <= 0.0:
            raise ValueError("cannot sample: tilde weights are all zero")
        if rng.random() < self._p_rows:
            return self.matrix.sample_row(rng)
        return int(rng.integers(self.n))

    def query_true(self, i):
        return approx_distance(self.matrix.row_view(i), self.center, self.cfg, self._rng)

    def query_tilde(self, i):
        return self._inflate * math.sqrt(2.0 * (self.matrix.row_norm2(i) + self._c2))

    def sample_tilde_batch(self, rng, size):
        if self._norm2_tilde <= 0.0:
            raise ValueError("cannot sample: tilde weights are all zero")
        take_rows = rng.random(size) < self._p_rows
        n_rows = int(np.count_nonzero(take_rows))
        out = np.empty(size, dtype=np.int64)
        if n_rows:
            out[take_rows] = self.matrix.sample_rows_batch(rng, n_rows)
        if n_rows < size:
            out[~take_rows] = rng.integers(0, self.n, size - n_rows)
        return out

    def query_true_batch(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape[0], dtype=np.float64)
        c2 = self._c2
        for row in np.unique(idx):
            mask = idx == row
            cnt = int(np.count_nonzero(mask))
            view = self.matrix.row_view(int(row))
            est = estimate_inner_batch(view, self.center, self.cfg, self._rng, cnt)
            d2 = view.norm2 + c2 - 2.0 * est
            out[mask] = np.sqrt(np.maximum(0.0, d2))
        return out

    def query_tilde_batch(self, idx):
        return self._inflate * np.sqrt(2.0 * (self.matrix.row_norm2_batch(idx) + self._c2))
