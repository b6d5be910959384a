"""Sampled inner products: unbiasedness, exactness cases, noisy distances."""

import math

import numpy as np
import pytest

from d2seed.approx_ip import (
    IpEstimatorConfig,
    NoisyDistanceOsq,
    approx_distance,
    estimate_inner,
    estimate_inner_batch,
)
from d2seed.sqtree import SqMatrix, SqVector

MAT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
CFG1 = IpEstimatorConfig(eps=0.5, delta=0.5, group_size=1, n_groups=1)


class TestConfig:
    def test_from_tolerance_formulas(self):
        cfg = IpEstimatorConfig.from_tolerance(1.0, 0.5, 1.0)
        assert (cfg.group_size, cfg.n_groups) == (9, 7)
        assert cfg.draws == 63
        # quadratic in 1/eps, linear in the variance bound
        assert IpEstimatorConfig.from_tolerance(0.5, 0.5, 1.0).group_size == 36
        assert IpEstimatorConfig.from_tolerance(1.0, 0.5, 10.0).group_size == 90

    def test_validation(self):
        with pytest.raises(ValueError):
            IpEstimatorConfig(eps=0.1, delta=0.1, group_size=1, n_groups=2)  # even
        with pytest.raises(ValueError):
            IpEstimatorConfig(eps=0.0, delta=0.1, group_size=1, n_groups=1)
        with pytest.raises(ValueError):
            IpEstimatorConfig(eps=0.1, delta=1.0, group_size=1, n_groups=1)
        with pytest.raises(ValueError):
            IpEstimatorConfig(eps=0.1, delta=0.1, group_size=0, n_groups=1)
        with pytest.raises(ValueError):
            IpEstimatorConfig.from_tolerance(0.1, 0.1, 0.0)


class TestUnbiasedness:
    def test_enumerated_mean_small_example(self):
        # a = (3,4), c = (1,1): draws 0/1 with probs 9/25, 16/25 and
        # values 25/3, 25/4, so the mean is exactly 3 + 4 = 7.
        probs = np.array([9 / 25, 16 / 25])
        vals = np.array([25 / 3, 25 / 4])
        assert math.fsum((probs * vals).tolist()) == pytest.approx(7.0, rel=1e-14)

    def test_enumerated_mean_random_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            a = rng.normal(size=n) * rng.integers(0, 2, size=n)  # some exact zeros
            c = rng.normal(size=n)
            if not a.any():
                a[0] = 1.0
            A = float((a**2).sum())
            support = np.flatnonzero(a)
            mean = math.fsum(((a[t] ** 2 / A) * (c[t] / a[t]) * A for t in support))
            assert mean == pytest.approx(float(a @ c), rel=1e-9, abs=1e-12)

    def test_sampled_estimate_tracks_target(self):
        rng = np.random.default_rng(1)
        for _ in range(3):
            a = rng.normal(size=16) + 3.0
            c = rng.normal(size=16) + 3.0
            target = float(a @ c)
            A, C = float((a**2).sum()), float((c**2).sum())
            cfg = IpEstimatorConfig.from_tolerance(0.2, 0.1, A * C / target**2)
            est = estimate_inner(SqVector(a), SqVector(c), cfg, rng)
            assert abs(est - target) <= 0.2 * abs(target)


class TestExactCases:
    def test_coincident_vectors_are_exact(self):
        a = SqVector(np.array([3.0, 4.0]))
        rng = np.random.default_rng(2)
        assert estimate_inner(a, a, CFG1, rng) == 25.0
        assert approx_distance(a, a, CFG1, rng) == 0.0

    def test_single_support_row_is_exact(self):
        # a = (0,1), c = (0,3): only t = 1 can be drawn, X = 3 exactly
        a, c = SqVector(np.array([0.0, 1.0])), SqVector(np.array([0.0, 3.0]))
        rng = np.random.default_rng(3)
        assert estimate_inner(a, c, CFG1, rng) == 3.0
        assert approx_distance(a, c, CFG1, rng) == 2.0

    def test_zero_vector_needs_no_draws(self):
        z = SqVector(np.zeros(3))
        c = SqVector(np.array([1.0, 2.0, 3.0]))
        rng = np.random.default_rng(4)
        assert estimate_inner(z, c, CFG1, rng) == 0.0
        assert estimate_inner_batch(z, c, CFG1, rng, 5).tolist() == [0.0] * 5
        assert approx_distance(z, c, CFG1, rng) == pytest.approx(math.sqrt(14.0), rel=1e-12)

    def test_zero_queried_vector(self):
        a = SqVector(np.array([2.0, 1.0]))
        z = SqVector(np.zeros(2))
        rng = np.random.default_rng(5)
        assert estimate_inner(a, z, CFG1, rng) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            estimate_inner(SqVector(np.ones(2)), SqVector(np.ones(3)), CFG1, np.random.default_rng(0))


class TestDistanceClamping:
    def test_overshoot_clamps_to_zero(self):
        # a = (1,10), c = (10,1): drawing t = 0 gives X = 1010, which makes
        # the distance estimate negative; the distance must clamp to 0.0.
        a, c = SqVector(np.array([1.0, 10.0])), SqVector(np.array([10.0, 1.0]))
        clamped = False
        for seed in range(400):
            d = approx_distance(a, c, CFG1, np.random.default_rng(seed))
            if d == 0.0:
                clamped = True
                break
        assert clamped


class TestNoisyDistanceOsq:
    def _handle(self, eps=0.5, center=(0.0, 3.0)):
        cfg = IpEstimatorConfig(eps=eps, delta=0.5, group_size=1, n_groups=1)
        rng = np.random.default_rng(6)
        return NoisyDistanceOsq(SqMatrix(MAT), np.array(center), cfg, rng)

    def test_inflated_tilde_closed_form(self):
        h = self._handle(eps=0.5, center=(1.0, 0.0))
        assert h.norm2_tilde == pytest.approx(2.25 * 16.0, rel=1e-12)
        assert h.query_tilde(1) == pytest.approx(1.5 * 2.0, rel=1e-12)
        got = h.query_tilde_batch(np.arange(3))
        assert got == pytest.approx(1.5 * np.sqrt(2.0 * np.array([1.0, 2.0, 5.0])), rel=1e-12)

    def test_single_support_rows_give_exact_distances(self):
        h = self._handle()
        # rows (0,0), (1,0), (0,2) against center (0,3): each row has at most
        # one nonzero coordinate, so every estimate is deterministic.
        assert h.query_true(0) == 3.0
        assert h.query_true(1) == pytest.approx(math.sqrt(10.0), rel=1e-12)
        assert h.query_true(2) == 1.0
        got = h.query_true_batch(np.array([2, 2, 1, 0]))
        assert got == pytest.approx([1.0, 1.0, math.sqrt(10.0), 3.0], rel=1e-12)

    def test_domination_with_calibrated_noise(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=(20, 4)) + 2.0
        m = SqMatrix(values - values[0])
        center = m.row(5).copy()
        cfg = IpEstimatorConfig(eps=0.5, delta=0.2, group_size=256, n_groups=9)
        h = NoisyDistanceOsq(m, center, cfg, rng)
        idx = np.arange(20)
        assert (h.query_true_batch(idx) <= h.query_tilde_batch(idx) + 1e-12).all()

    def test_tilde_sampling_law_matches_mixture(self):
        h = self._handle(eps=0.5, center=(1.0, 0.0))
        rng = np.random.default_rng(8)
        draws = h.sample_tilde_batch(rng, 30000)
        from d2seed.oracle import empirical_distribution, tv_distance

        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, [1 / 8, 2 / 8, 5 / 8]) < 0.02

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            NoisyDistanceOsq(SqMatrix(MAT), np.zeros(3), CFG1, np.random.default_rng(0))
