"""Center seeding: exact D^2 sampling and its tree-accelerated variants.

All seeders consume a single integer seed, record per-round trial counts and
wall times, and return chosen *row indices* plus the corresponding original
coordinates. Tree-backed seeders shift the data so row 0 sits at the origin
before building sample-query access: D^2 distributions are translation
invariant, and the shift keeps the oversampling factor within the
aspect-ratio bound instead of growing with the dataset's distance from the
origin.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .approx_ip import IpEstimatorConfig, NoisyDistanceOsq
from .data import DataSet, aspect_ratio
from .osq import (
    DistanceOsq,
    MinOsq,
    SamplingExhausted,
    default_trial_budget,
    rejection_sample,
)
from .sqtree import SqMatrix

PHI_SAFETY = 4.0
ZETA_SAMPLE_SIZE = 1024


@dataclass(frozen=True)
class RoundStats:
    round: int
    trials: int
    seconds: float


@dataclass
class SeedingResult:
    algorithm: str
    rng_seed: int
    center_indices: list[int]
    centers: np.ndarray
    per_round: list[RoundStats]

    @property
    def k(self) -> int:
        return len(self.center_indices)

    @property
    def sample_seconds(self) -> float:
        return float(sum(r.seconds for r in self.per_round))

    @property
    def total_trials(self) -> int:
        return int(sum(r.trials for r in self.per_round))


def build_seeding_matrix(ds: DataSet) -> SqMatrix:
    """Sample-query access over the dataset shifted so row 0 is the origin."""
    return SqMatrix(ds.values - ds.values[0])


def estimate_phi_bound(ds: DataSet, sample_size: int = ZETA_SAMPLE_SIZE, seed: int = 0) -> float:
    """Budget-only bound on the oversampling factor: 8 zeta^2 with safety margin.

    zeta comes from a row subsample when the dataset is large, so this is an
    estimate; an undershoot can only exhaust a trial budget (explicit error),
    never bias the sampled distribution.
    """
    size = sample_size if ds.n_points > sample_size else None
    try:
        report = aspect_ratio(ds, sample_size=size, seed=seed)
    except ValueError:
        return PHI_SAFETY  # all sampled points coincide; budgets stay minimal
    return PHI_SAFETY * 8.0 * report.zeta**2


def _validate_k(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n_points, got k={k}, n={n}")


def _exact_d2_rounds(values: np.ndarray, n_centers: int, rng: np.random.Generator):
    """Exact D^2 seeding against a maintained closest-distance array.

    Consumes one integers() draw for the first center and one random() draw
    per later round (plus one integers() draw on an all-zero round, where the
    choice falls back to uniform over unchosen indices).
    """
    n = values.shape[0]
    chosen: list[int] = []
    per_round: list[RoundStats] = []
    closest = None
    for r in range(1, n_centers + 1):
        t0 = time.perf_counter()
        if r == 1:
            idx = int(rng.integers(n))
        else:
            total = float(closest.sum())
            if total > 0.0:
                u = rng.random() * total
                idx = int(np.searchsorted(np.cumsum(closest), u, side="right"))
                idx = min(idx, n - 1)
            else:
                remaining = np.setdiff1d(np.arange(n), np.array(chosen, dtype=np.int64))
                idx = int(remaining[rng.integers(remaining.shape[0])])
        diff = values - values[idx]
        d2 = np.einsum("ij,ij->i", diff, diff)
        closest = d2 if closest is None else np.minimum(closest, d2)
        chosen.append(idx)
        per_round.append(RoundStats(round=r, trials=1, seconds=time.perf_counter() - t0))
    return chosen, per_round


def _residual_is_zero(matrix: SqMatrix, chosen: list[int]) -> bool:
    """Full scan deciding whether every point coincides with a chosen center.

    Only called after a rejection budget ran out, so the O(n d) cost never
    lands on the sampling fast path."""
    values = matrix.values[: matrix.n_rows]
    best = None
    for i in chosen:
        diff = values - values[i]
        d2 = np.einsum("ij,ij->i", diff, diff)
        best = d2 if best is None else np.minimum(best, d2)
    return float(best.max()) == 0.0


def _sq_d2_rounds(
    matrix: SqMatrix,
    n_centers: int,
    rng: np.random.Generator,
    trial_budget: int,
    handle_factory,
):
    """Tree-backed D^2 seeding: uniform first center, then rejection sampling
    against the pointwise-minimum handle over per-center distance handles.

    A round whose residual weight is exactly zero (every remaining point
    coincides with a center) can never accept; after the budget runs out a
    single verification scan confirms that and the round falls back to a
    uniform draw over unchosen indices, mirroring the exact path. A nonzero
    residual re-raises the exhaustion with round context."""
    n = matrix.n_rows
    chosen: list[int] = []
    handles: list = []
    per_round: list[RoundStats] = []
    for r in range(1, n_centers + 1):
        t0 = time.perf_counter()
        if r == 1:
            idx = int(rng.integers(n))
            trials = 1
        else:
            handles.append(handle_factory(matrix.row(chosen[-1]).copy()))
            try:
                out = rejection_sample(MinOsq(handles), rng, trial_budget)
                idx = out.index
                trials = out.trials
            except SamplingExhausted as exc:
                if not _residual_is_zero(matrix, chosen):
                    raise SamplingExhausted(exc.trials, f"seeding round {r}") from exc
                remaining = np.setdiff1d(np.arange(n), np.array(chosen, dtype=np.int64))
                idx = int(remaining[rng.integers(remaining.shape[0])])
                trials = exc.trials
        chosen.append(idx)
        per_round.append(RoundStats(round=r, trials=trials, seconds=time.perf_counter() - t0))
    return chosen, per_round


def _finish(ds, algorithm, seed, chosen, per_round) -> SeedingResult:
    return SeedingResult(
        algorithm=algorithm,
        rng_seed=seed,
        center_indices=chosen,
        centers=ds.values[np.array(chosen, dtype=np.int64)].copy(),
        per_round=per_round,
    )


def kmeanspp(ds: DataSet, k: int, seed: int = 0) -> SeedingResult:
    """Classical k-means++: exact D^2 sampling, O(n d) per round."""
    _validate_k(ds.n_points, k)
    rng = np.random.default_rng(seed)
    chosen, per_round = _exact_d2_rounds(ds.values, k, rng)
    return _finish(ds, "kmpp", seed, chosen, per_round)


def qi_kmeanspp(
    ds: DataSet,
    k: int,
    delta: float = 0.01,
    seed: int = 0,
    matrix: SqMatrix | None = None,
    phi_hat: float | None = None,
    trial_budget: int | None = None,
) -> SeedingResult:
    """Tree-accelerated k-means++ with exact per-point distance queries.

    Sampling work per round is independent of n_points up to log factors;
    pass a prebuilt matrix (build_seeding_matrix) and phi_hat
    (estimate_phi_bound) to keep the one-off setup out of the seeding call.
    Per-round failure budget is delta/k.
    """
    _validate_k(ds.n_points, k)
    rng = np.random.default_rng(seed)
    if matrix is None:
        matrix = build_seeding_matrix(ds)
    if trial_budget is None:
        if phi_hat is None:
            phi_hat = estimate_phi_bound(ds)
        trial_budget = default_trial_budget(phi_hat, delta / k)
    chosen, per_round = _sq_d2_rounds(
        matrix, k, rng, trial_budget, lambda c: DistanceOsq(matrix, c)
    )
    return _finish(ds, "qikmpp", seed, chosen, per_round)


def qi_noisy_kmeanspp(
    ds: DataSet,
    k: int,
    eps: float,
    delta: float = 0.01,
    seed: int = 0,
    matrix: SqMatrix | None = None,
    phi_hat: float | None = None,
    trial_budget: int | None = None,
    cfg: IpEstimatorConfig | None = None,
) -> SeedingResult:
    """Tree-accelerated k-means++ with sampled (noisy) distance queries.

    Distance estimates carry relative error eps, so dominating weights are
    inflated by (1 + eps) and the trial budget by (1 + eps)^2. The default
    config sizes estimator groups from the worst-case variance bound zeta^4,
    which is faithful but slow; pass an explicit cfg to trade accuracy for
    speed.
    """
    _validate_k(ds.n_points, k)
    rng = np.random.default_rng(seed)
    if matrix is None:
        matrix = build_seeding_matrix(ds)
    if phi_hat is None and (trial_budget is None or cfg is None):
        phi_hat = estimate_phi_bound(ds)
    if cfg is None:
        zeta2 = phi_hat / (8.0 * PHI_SAFETY)  # undo the budget wrapper
        cfg = IpEstimatorConfig.from_tolerance(eps, delta, max(1.0, zeta2) ** 2)
    if trial_budget is None:
        trial_budget = default_trial_budget(phi_hat * (1.0 + eps) ** 2, delta / k)
    chosen, per_round = _sq_d2_rounds(
        matrix, k, rng, trial_budget, lambda c: NoisyDistanceOsq(matrix, c, cfg, rng)
    )
    return _finish(ds, "qikmpp-noisy", seed, chosen, per_round)


def pseudo_approx_2k(
    ds: DataSet,
    k: int,
    seed: int = 0,
    use_sq: bool = True,
    delta: float = 0.01,
    matrix: SqMatrix | None = None,
    phi_hat: float | None = None,
    trial_budget: int | None = None,
) -> SeedingResult:
    """2k rounds of D^2 sampling: a constant-factor pseudo approximation."""
    n_centers = 2 * k
    _validate_k(ds.n_points, n_centers)
    rng = np.random.default_rng(seed)
    if use_sq:
        if matrix is None:
            matrix = build_seeding_matrix(ds)
        if trial_budget is None:
            if phi_hat is None:
                phi_hat = estimate_phi_bound(ds)
            trial_budget = default_trial_budget(phi_hat, delta / n_centers)
        chosen, per_round = _sq_d2_rounds(
            matrix, n_centers, rng, trial_budget, lambda c: DistanceOsq(matrix, c)
        )
    else:
        chosen, per_round = _exact_d2_rounds(ds.values, n_centers, rng)
    return _finish(ds, "pseudo2k", seed, chosen, per_round)


def _draw_q(q_cum: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random(size) * q_cum[-1]
    return np.minimum(np.searchsorted(q_cum, u, side="right"), q_cum.shape[0] - 1)


def _min_d2_to(values: np.ndarray, idx: np.ndarray, centers: np.ndarray) -> np.ndarray:
    pts = values[idx]
    best = None
    for c in centers:
        diff = pts - c
        d2 = np.einsum("ij,ij->i", diff, diff)
        best = d2 if best is None else np.minimum(best, d2)
    return best


def _mh_round_batch(
    values: np.ndarray,
    q: np.ndarray,
    q_cum: np.ndarray,
    centers: np.ndarray,
    chain_len: int,
    rng: np.random.Generator,
    n_chains: int,
) -> np.ndarray:
    """chain_len total q-draws per chain: an initial state then chain_len - 1
    Metropolis-Hastings steps with acceptance min(1, d2(y) q(x) / (d2(x) q(y))).

    A zero denominator accepts outright: it covers both the 0/0 convention
    (both states on a center) and the infinite-ratio case d2(x) = 0 < d2(y).
    """
    x = _draw_q(q_cum, rng, n_chains)
    dx = _min_d2_to(values, x, centers)
    for _ in range(chain_len - 1):
        y = _draw_q(q_cum, rng, n_chains)
        dy = _min_d2_to(values, y, centers)
        num = dy * q[x]
        den = dx * q[y]
        accept = (den == 0.0) | (rng.random(n_chains) * den < num)
        x = np.where(accept, y, x)
        dx = np.where(accept, dy, dx)
    return x


def afk_mc2(ds: DataSet, k: int, chain_len: int = 200, seed: int = 0) -> SeedingResult:
    """Markov-chain approximate D^2 seeding.

    One O(n d) pass builds the proposal q(x) = d2(x, c1) / (2 cost) + 1/(2n);
    each later center runs a chain_len-step Metropolis-Hastings walk whose
    stationary distribution is the current D^2 distribution.
    """
    _validate_k(ds.n_points, k)
    if chain_len < 1:
        raise ValueError("chain_len must be >= 1")
    rng = np.random.default_rng(seed)
    values = ds.values
    n = ds.n_points

    t0 = time.perf_counter()
    first = int(rng.integers(n))
    diff = values - values[first]
    d2 = np.einsum("ij,ij->i", diff, diff)
    total = float(d2.sum())
    if total > 0.0:
        q = 0.5 * d2 / total + 0.5 / n
    else:
        q = np.full(n, 1.0 / n)
    q_cum = np.cumsum(q)
    chosen = [first]
    per_round = [RoundStats(round=1, trials=1, seconds=time.perf_counter() - t0)]

    for r in range(2, k + 1):
        t0 = time.perf_counter()
        centers = values[np.array(chosen, dtype=np.int64)]
        idx = int(_mh_round_batch(values, q, q_cum, centers, chain_len, rng, 1)[0])
        chosen.append(idx)
        per_round.append(
            RoundStats(round=r, trials=chain_len, seconds=time.perf_counter() - t0)
        )
    return _finish(ds, "afkmc2", seed, chosen, per_round)
