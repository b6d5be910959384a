"""Self-contained statistical invariant suites behind the `check` command.

Each suite re-derives its expectations from the brute-force oracle module,
runs the production sampling paths at fixed seeds, and reports pass/fail
with a one-line detail. `inject_fault` deliberately breaks the sampler so
the suites themselves can be shown to catch regressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .data import DataSet
from .osq import ArrayOsq, DistanceOsq, MinOsq, OsqHandle, oversampling_factor, rejection_sample_batch
from .seeding import kmeanspp
from .sqtree import SqMatrix

FAULT_ACCEPT_ALL = "accept-all"


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


class _AcceptAllWrapper(OsqHandle):
    """Deliberate fault: pretend every true weight equals its bound."""

    def __init__(self, inner: OsqHandle):
        self.inner = inner
        self.n = inner.n

    @property
    def norm2_tilde(self):
        return self.inner.norm2_tilde

    def sample_tilde(self, rng):
        return self.inner.sample_tilde(rng)

    def sample_tilde_batch(self, rng, size):
        return self.inner.sample_tilde_batch(rng, size)

    def query_true(self, i):
        return self.inner.query_tilde(i)

    def query_true_batch(self, idx):
        return self.inner.query_tilde_batch(idx)

    def query_tilde(self, i):
        return self.inner.query_tilde(i)

    def query_tilde_batch(self, idx):
        return self.inner.query_tilde_batch(idx)


def _instance(seed: int, n: int = 24, d: int = 3, m: int = 3):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(n, d)) * rng.uniform(0.5, 2.0)
    ds = DataSet.from_array(values)
    center_idx = rng.choice(n, size=m, replace=False)
    return ds, list(int(i) for i in center_idx)


def _min_handle(ds: DataSet, center_idx: list[int], fault: str | None) -> OsqHandle:
    matrix = SqMatrix(ds.values)
    handle = MinOsq([DistanceOsq(matrix, ds.values[i].copy()) for i in center_idx])
    if fault == FAULT_ACCEPT_ALL:
        return _AcceptAllWrapper(handle)
    return handle


def check_tv(seed: int = 0, samples: int = 30000, fault: str | None = None) -> CheckResult:
    """Rejection output matches the exact D^2 distribution in TV distance."""
    worst = 0.0
    for trial in range(3):
        ds, center_idx = _instance(seed + 17 * trial)
        handle = _min_handle(ds, center_idx, fault)
        rng = np.random.default_rng(seed + 1000 + trial)
        idx, _, _ = rejection_sample_batch(handle, rng, samples, trial_budget=2000)
        emp = oracle.empirical_distribution(idx, ds.n_points)
        exact = oracle.exact_d2_distribution(ds, ds.values[np.array(center_idx)])
        worst = max(worst, oracle.tv_distance(emp.probs, exact.probs))
    passed = worst < 0.03
    return CheckResult("tv", passed, f"max TV over 3 instances = {worst:.4f} (limit 0.03)")


def check_domination(seed: int = 0, fault: str | None = None) -> CheckResult:
    """Tilde weights dominate true weights and match their closed-form norm."""
    worst_gap = 0.0
    worst_norm = 0.0
    for trial in range(3):
        ds, center_idx = _instance(seed + 31 * trial)
        matrix = SqMatrix(ds.values)
        for ci in center_idx:
            h = DistanceOsq(matrix, ds.values[ci].copy())
            idx = np.arange(ds.n_points)
            tilde = h.query_tilde_batch(idx)
            true = h.query_true_batch(idx)
            worst_gap = max(worst_gap, float((true - tilde).max()))
            closed = 2.0 * (matrix.norm2 + ds.n_points * float(ds.values[ci] @ ds.values[ci]))
            scan = math.fsum((tilde * tilde).tolist())
            worst_norm = max(
                worst_norm,
                abs(h.norm2_tilde - closed) / closed,
                abs(scan - h.norm2_tilde) / closed,
            )
    passed = worst_gap <= 1e-12 and worst_norm <= 1e-9
    return CheckResult(
        "domination",
        passed,
        f"max true-over-tilde gap {worst_gap:.2e}, norm mismatch {worst_norm:.2e}",
    )


def check_phi(seed: int = 0, fault: str | None = None) -> CheckResult:
    """Mean trial counts track the oversampling factor within a factor 2."""
    rng = np.random.default_rng(seed)
    ok = True
    details = []
    for phi_target in (1.0, 6.0, 20.0):
        true = rng.uniform(0.5, 1.5, size=64)
        tilde = true * math.sqrt(phi_target)
        h = ArrayOsq(true, tilde)
        phi = oversampling_factor(h)
        _, proposals, _ = rejection_sample_batch(h, rng, 4000, trial_budget=10000)
        mean_trials = proposals / 4000.0
        ratio = mean_trials / phi
        ok &= 0.5 <= ratio <= 2.0
        details.append(f"phi={phi:.2f} trials={mean_trials:.2f}")
    return CheckResult("phi", ok, "; ".join(details))


def check_oracle(seed: int = 0, fault: str | None = None) -> CheckResult:
    """Exact-seeding path agrees with an oracle-driven mirror sampler."""
    ds, _ = _instance(seed, n=16, d=2)
    k = 4
    result = kmeanspp(ds, k, seed=seed + 5)

    rng = np.random.default_rng(seed + 5)
    mirror = [int(rng.integers(ds.n_points))]
    for _ in range(k - 1):
        w = oracle.exact_d2_weights(ds, ds.values[np.array(mirror)])
        u = rng.random() * w.sum()
        mirror.append(int(np.searchsorted(np.cumsum(w), u, side="right")))
    same = mirror == result.center_indices

    mu = ds.values.mean(axis=0)
    cost = oracle.exact_cost(ds, mu)
    identity = math.fsum((ds.values * ds.values).sum(axis=1).tolist()) - ds.n_points * float(
        mu @ mu
    )
    close = abs(cost - identity) <= 1e-9 * max(1.0, cost)
    passed = same and close
    return CheckResult(
        "oracle",
        passed,
        f"index match = {same}, centroid identity gap = {abs(cost - identity):.2e}",
    )


SUITES = {
    "tv": check_tv,
    "domination": check_domination,
    "phi": check_phi,
    "oracle": check_oracle,
}


def run_checks(
    name_filter: str | None = None,
    seed: int = 0,
    fault: str | None = None,
) -> list[CheckResult]:
    results = []
    for name, fn in SUITES.items():
        if name_filter and name_filter not in name:
            continue
        results.append(fn(seed=seed, fault=fault))
    return results
