"""Enumeration-based (1 + eps) refinement of a pseudo-approximate seeding.

Each outer round draws a multiset M of row indices — rho * k D^2 samples
against the initial centers plus tau * k copies of every initial center —
and enumerates all unordered k-tuples of disjoint tau-sub-multisets of M.
Their centroid tuples are the candidate center sets; the best exact cost
over all rounds wins. Enumeration is organized over M's *distinct-point
support* with multiplicities, so duplicated rows never inflate the candidate
space, and its exact size is counted against a budget before any tuple is
materialized.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .data import DataSet
from .oracle import exact_cost, exact_d2_weights
from .osq import DistanceOsq, MinOsq, default_trial_budget, rejection_sample_batch
from .seeding import build_seeding_matrix, estimate_phi_bound, pseudo_approx_2k


class EnumerationBudgetError(RuntimeError):
    """The candidate list would exceed the configured enumeration budget."""

    def __init__(self, bound: float, budget: int, detail: str = ""):
        self.bound = bound
        self.budget = budget
        msg = f"candidate bound {bound:g} exceeds budget {budget:g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class SchemeParams:
    """Sampling and enumeration sizes for one scheme run."""

    k: int
    rho: int
    tau: int
    outer_rounds: int
    budget: int

    def __post_init__(self):
        if min(self.k, self.rho, self.tau, self.outer_rounds, self.budget) < 1:
            raise ValueError("all scheme parameters must be >= 1")

    @staticmethod
    def from_tolerance(
        k: int,
        eps: float,
        c_rho: float = 1.0,
        c_tau: float = 4.0,
        budget: int = 10**7,
    ) -> "SchemeParams":
        """rho = ceil(c_rho k / eps^4), tau = ceil(c_tau / eps), outer = min(2^k, 8).

        Already scaled far below the provable constants; quartic growth in
        1/eps still makes small eps enumeration-infeasible, which the budget
        check reports before any work happens.
        """
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        rho = max(1, math.ceil(c_rho * k / eps**4))
        tau = max(1, math.ceil(c_tau / eps))
        outer = min(2**k, 8)
        return SchemeParams(k=k, rho=rho, tau=tau, outer_rounds=outer, budget=budget)

    @staticmethod
    def desk(k: int, eps: float, budget: int = 10**7) -> "SchemeParams":
        """Empirically sized constants for interactive-scale instances."""
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        tau = max(2, math.ceil(1.0 / eps))
        rho = max(8, math.ceil(2.0 * k / eps**2))
        outer = min(2**k, 8)
        return SchemeParams(k=k, rho=rho, tau=tau, outer_rounds=outer, budget=budget)


@dataclass
class CandidateList:
    """Deduplicated centroid tuples plus enumeration provenance."""

    candidates: np.ndarray  # (n_candidates, k, d)
    n_enumerated: int
    support_size: int
    loose_bound: float


@dataclass
class SchemeResult:
    centers: np.ndarray
    cost: float
    params: SchemeParams
    c_init_indices: list[int]
    c_init_cost: float
    n_candidates: int
    rounds_run: int
    seconds: float


def bgjk_sample_round(
    ds: DataSet,
    params: SchemeParams,
    c_init: list[int],
    rng: np.random.Generator,
    matrix=None,
    phi_hat: float | None = None,
    residual_cost: float | None = None,
) -> np.ndarray:
    """One round's multiset M of row indices.

    rho * k indices are D^2-sampled against the c_init centers (tree-backed
    rejection sampling), then tau * k copies of every c_init index are
    appended so each S_i can be tau copies of one initial center. When the
    residual cost is exactly zero the D^2 distribution does not exist and M
    is just the copies.
    """
    n_samples = params.rho * params.k
    if residual_cost is None:
        residual_cost = float(exact_d2_weights(ds, ds.values[np.array(c_init)]).sum())
    if residual_cost > 0.0:
        if matrix is None:
            matrix = build_seeding_matrix(ds)
        if phi_hat is None:
            phi_hat = estimate_phi_bound(ds)
        handle = MinOsq([DistanceOsq(matrix, matrix.row(i).copy()) for i in c_init])
        budget = default_trial_budget(phi_hat, 0.01)
        sampled, _, _ = rejection_sample_batch(handle, rng, n_samples, budget)
    else:
        sampled = np.empty(0, dtype=np.int64)
    copies = np.repeat(np.array(c_init, dtype=np.int64), params.tau * params.k)
    return np.concatenate([sampled, copies])


def _cv_count(avail: np.ndarray, tau: int) -> int:
    """Number of sub-multisets of size tau under per-type availability caps."""
    ways = [0] * (tau + 1)
    ways[0] = 1
    for a in avail:
        new = [0] * (tau + 1)
        for r in range(tau + 1):
            top = min(int(a), r)
            new[r] = sum(ways[r - c] for c in range(top + 1))
        ways = new
    return ways[tau]


def _count_vectors(avail: np.ndarray, tau: int) -> np.ndarray:
    """All count vectors (lexicographically ascending) summing to tau, capped."""
    s = avail.shape[0]
    out: list[tuple[int, ...]] = []
    cv = [0] * s

    def rec(pos: int, rem: int):
        if pos == s - 1:
            if rem <= avail[pos]:
                cv[pos] = rem
                out.append(tuple(cv))
                cv[pos] = 0
            return
        for c in range(min(int(avail[pos]), rem) + 1):
            cv[pos] = c
            rec(pos + 1, rem - c)
            cv[pos] = 0

    rec(0, tau)
    return np.array(out, dtype=np.int64).reshape(len(out), s)


def _feasible_pairs(cvs: np.ndarray, avail: np.ndarray) -> np.ndarray:
    """Index pairs (p, q), p <= q, with cv_p + cv_q componentwise <= avail."""
    n = cvs.shape[0]
    pairs = []
    chunk = max(1, (1 << 22) // max(1, n * cvs.shape[1]))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        ok = ((cvs[lo:hi, None, :] + cvs[None, :, :]) <= avail).all(axis=2)
        ok &= np.arange(n)[None, :] >= np.arange(lo, hi)[:, None]
        p, q = np.nonzero(ok)
        pairs.append(np.stack([p + lo, q], axis=1))
    return np.concatenate(pairs, axis=0)


def _enumerate_index_tuples(cvs: np.ndarray, avail: np.ndarray, k: int) -> np.ndarray:
    """All non-decreasing k-tuples of count-vector indices that fit availability."""
    if k == 1:
        return np.arange(cvs.shape[0], dtype=np.int64)[:, None]
    if k == 2:
        return _feasible_pairs(cvs, avail)
    out: list[tuple[int, ...]] = []
    pick = [0] * k

    def rec(level: int, start: int, left: np.ndarray):
        if level == k:
            out.append(tuple(pick))
            return
        for p in range(start, cvs.shape[0]):
            if (cvs[p] <= left).all():
                pick[level] = p
                rec(level + 1, p, left - cvs[p])

    rec(0, 0, avail.copy())
    return np.array(out, dtype=np.int64).reshape(len(out), k)


def enumerate_candidates(
    m_indices: np.ndarray,
    values: np.ndarray,
    params: SchemeParams,
) -> CandidateList:
    """Candidate center sets from all disjoint tau-sub-multiset k-tuples of M.

    The exact tuple count is bounded before enumeration: with U count vectors
    over the support, at most C(U + k - 1, k) tuples exist, and that bound
    must fit the budget. The classical worst case (|M| choose tau)^k is kept
    as a diagnostic only — it ignores duplicate collapse and would reject
    every instance whose support is small.
    """
    m_indices = np.asarray(m_indices, dtype=np.int64)
    k, tau = params.k, params.tau
    if m_indices.shape[0] < tau * k:
        raise ValueError(f"|M| = {m_indices.shape[0]} < tau*k = {tau * k}")
    idx_support, idx_counts = np.unique(m_indices, return_counts=True)
    # Collapse indices that share exact coordinates: the support is M's set of
    # distinct points, with multiplicities summed across coinciding rows.
    pts = values[idx_support] + 0.0  # normalize -0.0 so byte-equality is value-equality
    pt_bytes = np.ascontiguousarray(pts).view([("", np.void, pts.shape[1] * 8)])[:, 0]
    _, first_pos, inverse = np.unique(pt_bytes, return_index=True, return_inverse=True)
    support = idx_support[first_pos]
    counts = np.zeros(first_pos.shape[0], dtype=np.int64)
    np.add.at(counts, inverse, idx_counts)
    loose_bound = float(math.comb(m_indices.shape[0], tau)) ** k

    n_cvs = _cv_count(counts, tau)
    bound = math.comb(n_cvs + k - 1, k)
    if bound > params.budget:
        raise EnumerationBudgetError(
            float(bound), params.budget, f"{n_cvs} tau-sub-multisets over {support.shape[0]} points"
        )

    cvs = _count_vectors(counts, tau)
    tuples = _enumerate_index_tuples(cvs, counts, k)
    n_enumerated = tuples.shape[0]
    if n_enumerated > params.budget:
        raise EnumerationBudgetError(float(n_enumerated), params.budget)
    if n_enumerated == 0:
        raise ValueError("no feasible candidate tuples (availability too fragmented)")

    # Centroid per count vector, then gather tuples: (n, k, d).
    centroids = (cvs.astype(np.float64) @ values[support]) / float(tau)
    cand = centroids[tuples] + 0.0  # normalize -0.0 so byte-equality is value-equality

    # Canonical within-tuple order + first-occurrence dedup on exact coordinates.
    row_bytes = np.ascontiguousarray(cand).view([("", np.void, cand.shape[2] * 8)])[..., 0]
    order = np.argsort(row_bytes, axis=1, kind="stable")
    cand = np.take_along_axis(cand, order[:, :, None], axis=1)
    flat = cand.reshape(n_enumerated, k * cand.shape[2])
    _, first = np.unique(flat, axis=0, return_index=True)
    keep = np.sort(first)
    return CandidateList(
        candidates=cand[keep],
        n_enumerated=n_enumerated,
        support_size=int(support.shape[0]),
        loose_bound=loose_bound,
    )


def best_center_set(ds: DataSet, cand: CandidateList) -> tuple[float, np.ndarray]:
    """Exact-cost argmin over candidates; ties keep the earliest candidate."""
    candidates = cand.candidates
    if candidates.shape[0] == 0:
        raise ValueError("empty candidate list")
    n, d = ds.values.shape
    k = candidates.shape[1]
    best_cost = math.inf
    best_idx = -1
    chunk = max(1, (1 << 21) // max(1, k * n * d))
    for lo in range(0, candidates.shape[0], chunk):
        hi = min(candidates.shape[0], lo + chunk)
        diff = candidates[lo:hi, :, None, :] - ds.values[None, None, :, :]
        costs = np.einsum("ckni,ckni->ckn", diff, diff).min(axis=1).sum(axis=1)
        j = int(np.argmin(costs))
        if costs[j] < best_cost:
            best_cost = float(costs[j])
            best_idx = lo + j
    centers = candidates[best_idx]
    return exact_cost(ds, centers), centers


def approx_scheme(
    ds: DataSet,
    k: int,
    eps: float,
    seed: int = 0,
    budget: int = 10**7,
    params: SchemeParams | None = None,
    use_sq: bool = True,
) -> SchemeResult:
    """Pseudo-approximate seeding, then outer rounds of sample + enumerate + score.

    Every round's candidate list contains all k-multisets of the initial
    centers (tau copies of a center average to that center), so the result
    never trails the best k-subset of the initial seeding.
    """
    t0 = time.perf_counter()
    if params is None:
        params = SchemeParams.from_tolerance(k, eps, budget=budget)
    seeds = np.random.SeedSequence(seed).generate_state(2)
    init = pseudo_approx_2k(ds, k, seed=int(seeds[0]), use_sq=use_sq)
    c_init = init.center_indices
    c_init_cost = exact_cost(ds, ds.values[np.array(c_init)])

    rng = np.random.default_rng(int(seeds[1]))
    matrix = build_seeding_matrix(ds) if use_sq else None
    phi_hat = estimate_phi_bound(ds)
    best_cost = math.inf
    best_centers = None
    n_candidates = 0
    for _ in range(params.outer_rounds):
        m = bgjk_sample_round(
            ds, params, c_init, rng,
            matrix=matrix, phi_hat=phi_hat, residual_cost=c_init_cost,
        )
        cand = enumerate_candidates(m, ds.values, params)
        n_candidates += cand.candidates.shape[0]
        cost, centers = best_center_set(ds, cand)
        if cost < best_cost:
            best_cost = cost
            best_centers = centers
    return SchemeResult(
        centers=best_centers,
        cost=best_cost,
        params=params,
        c_init_indices=list(c_init),
        c_init_cost=c_init_cost,
        n_candidates=n_candidates,
        rounds_run=params.outer_rounds,
        seconds=time.perf_counter() - t0,
    )
