"""Oversampled sample-query handles and exact rejection sampling.

A handle exposes sampling access to a *dominating* weight vector w-tilde
(w_tilde(i) >= w(i) for all i, with known squared norm) plus exact point
queries of the true weights w. Rejection with acceptance (w(i)/w_tilde(i))^2
then yields samples distributed exactly as w(i)^2 / ||w||^2, at an expected
trial count of phi = ||w_tilde||^2 / ||w||^2 per accepted sample.

Scalar methods are the contract; *_batch variants implement the identical
distributions vectorized and exist for the statistical test suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sqtree import SqMatrix, SqVector


class SamplingExhausted(RuntimeError):
    """Rejection sampling used its whole trial budget without an acceptance."""

    def __init__(self, trials: int, context: str = ""):
        self.trials = trials
        self.context = context
        msg = f"no acceptance within {trials} trials"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


@dataclass
class RejectionOutcome:
    """One accepted sample: its index, trials spent, and clamp activations."""

    index: int
    trials: int
    clamped: int


class OsqHandle:
    """Contract for oversampled sample-query access over indices 0..n-1.

    Subclasses must keep query_tilde(i) >= query_true(i) >= 0 for every i and
    norm2_tilde equal to the sum of squared tilde weights. Batch methods may
    be overridden for speed; the defaults delegate to the scalar methods.
    """

    n: int

    @property
    def norm2_tilde(self) -> float:
        raise NotImplementedError

    def sample_tilde(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def query_true(self, i: int) -> float:
        raise NotImplementedError

    def query_tilde(self, i: int) -> float:
        raise NotImplementedError

    def sample_tilde_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.fromiter((self.sample_tilde(rng) for _ in range(size)), np.int64, size)

    def query_true_batch(self, idx: np.ndarray) -> np.ndarray:
        return np.fromiter((self.query_true(int(i)) for i in idx), np.float64, len(idx))

    def query_tilde_batch(self, idx: np.ndarray) -> np.ndarray:
        return np.fromiter((self.query_tilde(int(i)) for i in idx), np.float64, len(idx))


class ArrayOsq(OsqHandle):
    """Handle over explicit weight arrays; the tilde side is tree-sampled."""

    def __init__(self, true_values, tilde_values, validate: bool = True):
        true_values = np.asarray(true_values, dtype=np.float64)
        tilde_values = np.asarray(tilde_values, dtype=np.float64)
        if true_values.shape != tilde_values.shape or true_values.ndim != 1:
            raise ValueError("true/tilde must be 1-d arrays of equal length")
        if validate:
            if (true_values < 0).any() or (tilde_values < 0).any():
                raise ValueError("weights must be nonnegative")
            if (tilde_values < true_values).any():
                bad = int(np.argmax(tilde_values < true_values))
                raise ValueError(f"domination violated at index {bad}")
        self.n = true_values.shape[0]
        self._true = true_values
        self._tilde = tilde_values
        self._tree = SqVector(tilde_values)

    @property
    def norm2_tilde(self) -> float:
        return self._tree.norm2

    def sample_tilde(self, rng):
        return self._tree.sample(rng)

    def query_true(self, i):
        return float(self._true[i])

    def query_tilde(self, i):
        return float(self._tilde[i])

    def sample_tilde_batch(self, rng, size):
        return self._tree.sample_batch(rng, size)

    def query_true_batch(self, idx):
        return self._true[idx]

    def query_tilde_batch(self, idx):
        return self._tilde[idx]


class DistanceOsq(OsqHandle):
    """Distances of matrix rows to one fixed center, oversampled.

    w(i) = ||V(i,.) - c||, dominated by w_tilde(i) = sqrt(2 (||V(i,.)||^2 + ||c||^2)),
    so ||w_tilde||^2 = 2 (||V||_F^2 + N ||c||^2). Tilde sampling mixes the
    squared-row-norm tree (weight ||V||_F^2) with a uniform row index
    (weight N ||c||^2); true queries read the raw row in O(d).
    """

    def __init__(self, matrix: SqMatrix, center):
        if isinstance(center, SqVector):
            self.center = center
        else:
            self.center = SqVector(center)
        if self.center.n != matrix.n_dims:
            raise ValueError("center dimension does not match the matrix")
        self.matrix = matrix
        self.n = matrix.n_rows
        self._c_arr = self.center.leaves
        self._c2 = self.center.norm2
        self._frob2 = matrix.norm2
        total = self._frob2 + self.n * self._c2
        self._p_rows = 1.0 if total <= 0.0 else self._frob2 / total
        self._norm2_tilde = 2.0 * total

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
        diff = self.matrix.row(i) - self._c_arr
        return math.sqrt(float(diff @ diff))

    def query_tilde(self, i):
        return math.sqrt(2.0 * (self.matrix.row_norm2(i) + self._c2))

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
        diff = self.matrix.values[idx] - self._c_arr
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def query_tilde_batch(self, idx):
        return np.sqrt(2.0 * (self.matrix.row_norm2_batch(idx) + self._c2))


class MinOsq(OsqHandle):
    """Pointwise minimum of several handles over the same index range.

    w(i) = min_j u_j(i); w_tilde(i) = sqrt(mean_j u_tilde_j(i)^2), giving
    ||w_tilde||^2 = mean_j ||u_tilde_j||^2. Tilde sampling picks branch j
    proportional to ||u_tilde_j||^2 (cumulative weights fixed at build) and
    delegates; true queries take the exact minimum across branches.
    """

    def __init__(self, branches):
        if not branches:
            raise ValueError("need at least one branch")
        ns = {b.n for b in branches}
        if len(ns) != 1:
            raise ValueError("branches cover different index ranges")
        self.branches = list(branches)
        self.n = self.branches[0].n
        self.m = len(self.branches)
        w2 = np.array([b.norm2_tilde for b in self.branches], dtype=np.float64)
        self._branch_cum = np.cumsum(w2)
        self._branch_total = float(self._branch_cum[-1])
        self._norm2_tilde = self._branch_total / self.m

    @property
    def norm2_tilde(self) -> float:
        return self._norm2_tilde

    def sample_tilde(self, rng):
        if self._branch_total <= 0.0:
            raise ValueError("cannot sample: tilde weights are all zero")
        u = rng.random() * self._branch_total
        j = min(int(np.searchsorted(self._branch_cum, u, side="right")), self.m - 1)
        return self.branches[j].sample_tilde(rng)

    def query_true(self, i):
        return min(b.query_true(i) for b in self.branches)

    def query_tilde(self, i):
        s = math.fsum(b.query_tilde(i) ** 2 for b in self.branches)
        return math.sqrt(s / self.m)

    def sample_tilde_batch(self, rng, size):
        if self._branch_total <= 0.0:
            raise ValueError("cannot sample: tilde weights are all zero")
        u = rng.random(size) * self._branch_total
        j = np.minimum(
            np.searchsorted(self._branch_cum, u, side="right"), self.m - 1
        )
        out = np.empty(size, dtype=np.int64)
        for b_idx in range(self.m):
            mask = j == b_idx
            cnt = int(np.count_nonzero(mask))
            if cnt:
                out[mask] = self.branches[b_idx].sample_tilde_batch(rng, cnt)
        return out

    def query_true_batch(self, idx):
        stacked = np.stack([b.query_true_batch(idx) for b in self.branches])
        return stacked.min(axis=0)

    def query_tilde_batch(self, idx):
        stacked = np.stack([b.query_tilde_batch(idx) ** 2 for b in self.branches])
        return np.sqrt(stacked.mean(axis=0))


def rejection_sample(
    handle: OsqHandle, rng: np.random.Generator, trial_budget: int
) -> RejectionOutcome:
    """Draw one index distributed as w(i)^2 / ||w||^2, or raise SamplingExhausted.

    Acceptance ratios above 1 indicate a domination bug (or deliberate noisy
    inflation); they are clamped and counted, never silently ignored.
    """
    if trial_budget < 1:
        raise ValueError("trial_budget must be >= 1")
    clamped = 0
    for t in range(1, trial_budget + 1):
        i = handle.sample_tilde(rng)
        wt = handle.query_tilde(i)
        if wt <= 0.0:
            continue  # true weight is zero too; nothing to accept
        ratio = (handle.query_true(i) / wt) ** 2
        if ratio > 1.0:
            clamped += 1
            ratio = 1.0
        if rng.random() < ratio:
            return RejectionOutcome(index=i, trials=t, clamped=clamped)
    raise SamplingExhausted(trial_budget)


def rejection_sample_batch(
    handle: OsqHandle,
    rng: np.random.Generator,
    n_samples: int,
    trial_budget: int,
) -> tuple[np.ndarray, int, int]:
    """Vectorized rejection: returns (indices, total proposals, clamp count).

    The budget is pooled: sampling fails only after trial_budget * n_samples
    proposals in total. Proposal chunks grow with the observed rejection rate
    so low-acceptance handles still finish in a few vectorized passes; only
    proposals up to the last needed acceptance are counted, which keeps the
    expected trials-per-sample equal to the oversampling factor.
    """
    out = np.empty(n_samples, dtype=np.int64)
    filled = 0
    proposals = 0
    clamped = 0
    max_proposals = trial_budget * n_samples
    chunk_cap = 1 << 20
    chunk = n_samples
    while filled < n_samples:
        if proposals >= max_proposals:
            raise SamplingExhausted(proposals, f"{filled}/{n_samples} accepted")
        m = int(min(chunk, max_proposals - proposals))
        idx = handle.sample_tilde_batch(rng, m)
        wt = handle.query_tilde_batch(idx)
        tr = handle.query_true_batch(idx)
        ratio = np.zeros(m, dtype=np.float64)
        pos = wt > 0.0
        ratio[pos] = (tr[pos] / wt[pos]) ** 2
        over = ratio > 1.0
        ratio[over] = 1.0
        acc = rng.random(m) < ratio
        hits = np.flatnonzero(acc)
        need = n_samples - filled
        if hits.shape[0] >= need:
            spent = int(hits[need - 1]) + 1
            out[filled:] = idx[hits[:need]]
            filled = n_samples
            proposals += spent
            clamped += int(np.count_nonzero(over[:spent]))
        else:
            out[filled : filled + hits.shape[0]] = idx[hits]
            filled += hits.shape[0]
            proposals += m
            clamped += int(np.count_nonzero(over))
            rate = (filled + 1.0) / (proposals + 1.0)
            want = math.ceil(1.3 * (n_samples - filled) / rate)
            chunk = max(n_samples, min(chunk_cap, want))
    return out, proposals, clamped


def oversampling_factor(handle: OsqHandle) -> float:
    """Diagnostic phi = ||w_tilde||^2 / ||w||^2 by full scan (O(n) true queries)."""
    idx = np.arange(handle.n, dtype=np.int64)
    true = handle.query_true_batch(idx)
    w2 = math.fsum((true * true).tolist())
    if w2 <= 0.0:
        raise ValueError("phi undefined: true weight vector is zero")
    return handle.norm2_tilde / w2


def default_trial_budget(phi_hat: float, delta: float) -> int:
    """ceil(16 * phi_hat * ln(1/delta)) with sane floors."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    phi_hat = max(1.0, phi_hat)
    return max(1, math.ceil(16.0 * phi_hat * math.log(1.0 / delta)))


def estimate_norm2(
    handle: OsqHandle,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    phi_hat: float | None = None,
) -> float:
    """Estimate ||w||^2 to relative error eps with failure probability delta.

    Single-draw estimator X = (w(i)/w_tilde(i))^2 * ||w_tilde||^2 with
    i ~ tilde distribution has mean ||w||^2 and variance at most
    (phi - 1) ||w||^4; groups of ceil(3 phi_hat / eps^2) draws are averaged
    and the median of 6 ceil(ln(1/delta)) group means is returned.
    """
    if not 0.0 < eps:
        raise ValueError("eps must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if phi_hat is None:
        phi_hat = oversampling_factor(handle)
    group_size = max(1, math.ceil(3.0 * phi_hat / (eps * eps)))
    n_groups = 6 * max(1, math.ceil(math.log(1.0 / delta)))
    total = handle.norm2_tilde
    means = np.empty(n_groups, dtype=np.float64)
    for g in range(n_groups):
        idx = handle.sample_tilde_batch(rng, group_size)
        wt = handle.query_tilde_batch(idx)
        tr = handle.query_true_batch(idx)
        x = np.zeros(group_size, dtype=np.float64)
        pos = wt > 0.0
        x[pos] = (tr[pos] / wt[pos]) ** 2 * total
        means[g] = x.mean()
    return float(np.median(means))
