"""Oversampled access handles, rejection sampling, norm estimation."""

import math

import numpy as np
import pytest

from d2seed.oracle import empirical_distribution, tv_distance
from d2seed.osq import (
    ArrayOsq,
    DistanceOsq,
    MinOsq,
    OsqHandle,
    SamplingExhausted,
    default_trial_budget,
    estimate_norm2,
    oversampling_factor,
    rejection_sample,
    rejection_sample_batch,
)
from d2seed.sqtree import SqMatrix, SqVector

# rows (0,0), (1,0), (0,2): ||v_i||^2 = 0, 1, 4; Frobenius^2 = 5
MAT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])


class TestArrayOsq:
    def test_validation(self):
        with pytest.raises(ValueError, match="domination violated at index 1"):
            ArrayOsq([1.0, 2.0], [1.0, 1.9])
        with pytest.raises(ValueError):
            ArrayOsq([-1.0], [1.0])
        with pytest.raises(ValueError):
            ArrayOsq([1.0, 1.0], [[1.0, 1.0]])
        ArrayOsq([1.0, 2.0], [1.0, 1.9], validate=False)  # explicit opt-out

    def test_queries_and_norm(self):
        h = ArrayOsq([0.0, 1.0, 2.0], [0.0, math.sqrt(2.0), 2.0])
        assert h.query_true(2) == 2.0
        assert h.query_tilde(1) == math.sqrt(2.0)
        assert h.norm2_tilde == pytest.approx(6.0, rel=1e-12)
        assert h.query_true_batch(np.array([2, 0])).tolist() == [2.0, 0.0]

    def test_tilde_sampling_law(self):
        h = ArrayOsq([0.0, 1.0, 2.0], [0.0, math.sqrt(2.0), 2.0])
        rng = np.random.default_rng(0)
        draws = h.sample_tilde_batch(rng, 20000)
        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, [0.0, 2 / 6, 4 / 6]) < 0.02


class TestDistanceOsq:
    def test_closed_forms_center_origin(self):
        h = DistanceOsq(SqMatrix(MAT), np.zeros(2))
        assert h.norm2_tilde == pytest.approx(10.0, rel=1e-12)
        assert h.query_true(2) == 2.0
        assert h.query_tilde(1) == pytest.approx(math.sqrt(2.0), rel=1e-12)
        assert oversampling_factor(h) == pytest.approx(2.0, rel=1e-12)

    def test_closed_forms_center_offset(self):
        h = DistanceOsq(SqMatrix(MAT), np.array([1.0, 0.0]))
        # 2 (5 + 3 * 1) = 16; row-tree mixture weight 5 / 8
        assert h.norm2_tilde == pytest.approx(16.0, rel=1e-12)
        assert h._p_rows == pytest.approx(5 / 8, rel=1e-12)
        assert h.query_true(1) == 0.0
        assert h.query_true(2) == pytest.approx(math.sqrt(5.0), rel=1e-12)

    def test_norm_matches_full_scan(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            m = SqMatrix(rng.normal(size=(17, 3)))
            h = DistanceOsq(m, rng.normal(size=3))
            scan = math.fsum(
                (h.query_tilde_batch(np.arange(17)) ** 2).tolist()
            )
            assert h.norm2_tilde == pytest.approx(scan, rel=1e-9)

    def test_domination_everywhere(self):
        # (a - b)^2 <= 2 a^2 + 2 b^2 exactly, so tilde >= true pointwise
        rng = np.random.default_rng(2)
        for _ in range(5):
            m = SqMatrix(rng.normal(size=(11, 4)) * 10.0)
            h = DistanceOsq(m, rng.normal(size=4) * 10.0)
            idx = np.arange(11)
            assert (h.query_tilde_batch(idx) >= h.query_true_batch(idx)).all()

    def test_tilde_sampling_law(self):
        h = DistanceOsq(SqMatrix(MAT), np.array([1.0, 0.0]))
        # Pr(i) ~ ||v_i||^2 + ||c||^2 = 1, 2, 5 over total 8
        rng = np.random.default_rng(3)
        draws = h.sample_tilde_batch(rng, 30000)
        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, [1 / 8, 2 / 8, 5 / 8]) < 0.02

    def test_accepts_prebuilt_center_vector(self):
        h = DistanceOsq(SqMatrix(MAT), SqVector(np.array([1.0, 0.0])))
        assert h.norm2_tilde == pytest.approx(16.0, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            DistanceOsq(SqMatrix(MAT), np.zeros(3))


class TestMinOsq:
    def _handle(self):
        m = SqMatrix(MAT)
        return MinOsq([DistanceOsq(m, np.zeros(2)), DistanceOsq(m, np.array([0.0, 2.0]))])

    def test_true_is_pointwise_min(self):
        h = self._handle()
        assert h.query_true_batch(np.arange(3)).tolist() == [0.0, 1.0, 0.0]
        assert h.query_true(1) == 1.0

    def test_tilde_is_root_mean_square(self):
        h = self._handle()
        # branch squares (0,2,8) and (8,10,16); means (4,6,12)
        assert h.query_tilde(0) == pytest.approx(2.0, rel=1e-12)
        got = h.query_tilde_batch(np.arange(3))
        assert got == pytest.approx(np.sqrt([4.0, 6.0, 12.0]), rel=1e-12)
        assert h.norm2_tilde == pytest.approx(22.0, rel=1e-12)  # (10 + 34) / 2
        scan = math.fsum((got**2).tolist())
        assert h.norm2_tilde == pytest.approx(scan, rel=1e-9)

    def test_domination_of_the_min(self):
        rng = np.random.default_rng(4)
        m = SqMatrix(rng.normal(size=(13, 3)))
        h = MinOsq([DistanceOsq(m, rng.normal(size=3)) for _ in range(4)])
        idx = np.arange(13)
        assert (h.query_tilde_batch(idx) >= h.query_true_batch(idx)).all()

    def test_tilde_sampling_law(self):
        h = self._handle()
        # marginal Pr(i) = mean_j u_tilde_j(i)^2 / (n * norm2_tilde) -> (4,6,12)/22
        rng = np.random.default_rng(5)
        draws = h.sample_tilde_batch(rng, 30000)
        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, np.array([4.0, 6.0, 12.0]) / 22.0) < 0.02

    def test_validation(self):
        with pytest.raises(ValueError):
            MinOsq([])
        with pytest.raises(ValueError):
            MinOsq([ArrayOsq([1.0], [1.0]), ArrayOsq([1.0, 1.0], [1.0, 1.0])])


class TestRejectionSampling:
    def test_exact_law(self):
        h = ArrayOsq([0.0, 1.0, 2.0], [0.0, math.sqrt(2.0), 2.0])
        rng = np.random.default_rng(6)
        draws, _, clamped = rejection_sample_batch(h, rng, 20000, trial_budget=64)
        assert clamped == 0
        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, [0.0, 0.2, 0.8]) < 0.02

    def test_scalar_matches_batch_law(self):
        h = ArrayOsq([3.0, 1.0, 0.0, 2.0], [3.0, 2.0, 1.0, 4.0])
        r1, r2 = np.random.default_rng(7), np.random.default_rng(8)
        one = np.array([rejection_sample(h, r1, 64).index for _ in range(8000)])
        many, _, _ = rejection_sample_batch(h, r2, 8000, 64)
        assert tv_distance(
            empirical_distribution(one, 4).probs, empirical_distribution(many, 4).probs
        ) < 0.03

    def test_trials_track_phi(self):
        rng = np.random.default_rng(9)
        true = rng.random(32) + 0.1
        for phi in (1.0, 6.0, 20.0):
            h = ArrayOsq(true, true * math.sqrt(phi))
            assert oversampling_factor(h) == pytest.approx(phi, rel=1e-9)
            _, proposals, _ = rejection_sample_batch(h, rng, 4000, trial_budget=64 * int(phi))
            mean_trials = proposals / 4000
            assert phi / 2 <= mean_trials <= phi * 2

    def test_clamp_is_counted(self):
        h = ArrayOsq([2.0, 2.0], [1.0, 2.0], validate=False)  # broken domination
        rng = np.random.default_rng(10)
        out = rejection_sample(h, rng, 1000)
        _, _, clamped = rejection_sample_batch(h, rng, 500, 64)
        assert out.clamped >= 0 and clamped > 0

    def test_exhaustion_scalar_and_batch(self):
        h = ArrayOsq([0.0, 0.0], [1.0, 1.0])  # nothing can ever be accepted
        rng = np.random.default_rng(11)
        with pytest.raises(SamplingExhausted) as exc:
            rejection_sample(h, rng, 37)
        assert exc.value.trials == 37
        with pytest.raises(SamplingExhausted, match="0/5 accepted"):
            rejection_sample_batch(h, rng, 5, 10)

    def test_zero_tilde_indices_never_appear(self):
        h = ArrayOsq([0.0, 1.0], [0.0, 1.0])
        rng = np.random.default_rng(12)
        draws, _, _ = rejection_sample_batch(h, rng, 2000, 16)
        assert set(draws.tolist()) == {1}

    def test_budget_validation(self):
        h = ArrayOsq([1.0], [1.0])
        with pytest.raises(ValueError):
            rejection_sample(h, np.random.default_rng(0), 0)


class TestBudgetAndPhi:
    def test_default_trial_budget_formula(self):
        assert default_trial_budget(2.0, 0.01) == 148  # ceil(32 ln 100)
        assert default_trial_budget(0.001, 0.5) == 12  # phi floored at 1
        assert default_trial_budget(10.0, 0.5) >= default_trial_budget(1.0, 0.5)
        with pytest.raises(ValueError):
            default_trial_budget(1.0, 0.0)

    def test_oversampling_factor_zero_true(self):
        with pytest.raises(ValueError):
            oversampling_factor(ArrayOsq([0.0, 0.0], [1.0, 1.0]))


class TestEstimateNorm2:
    def test_exact_when_tilde_equals_true(self):
        vals = np.array([1.5, 0.0, 2.0, 0.25])
        h = ArrayOsq(vals, vals)
        rng = np.random.default_rng(13)
        est = estimate_norm2(h, eps=0.5, delta=0.5, rng=rng)
        assert est == pytest.approx(float((vals**2).sum()), rel=1e-12)

    def test_relative_error_within_tolerance(self):
        rng = np.random.default_rng(14)
        for trial in range(3):
            true = rng.random(64) + 0.05
            tilde = true * (1.0 + rng.random(64) * 2.0)
            h = ArrayOsq(true, tilde)
            target = float((true**2).sum())
            est = estimate_norm2(h, eps=0.25, delta=0.1, rng=rng)
            assert abs(est - target) / target < 0.25

    def test_parameter_validation(self):
        h = ArrayOsq([1.0], [1.0])
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            estimate_norm2(h, eps=0.0, delta=0.1, rng=rng)
        with pytest.raises(ValueError):
            estimate_norm2(h, eps=0.1, delta=1.0, rng=rng)


class TestHandleContract:
    def test_batch_defaults_delegate_to_scalars(self):
        class TinyHandle(OsqHandle):
            def __init__(self):
                self.n = 3
                self._true = [0.0, 1.0, 2.0]
                self._tilde = [1.0, 2.0, 2.0]

            @property
            def norm2_tilde(self):
                return 9.0

            def sample_tilde(self, rng):
                return int(rng.integers(3))

            def query_true(self, i):
                return self._true[i]

            def query_tilde(self, i):
                return self._tilde[i]

        h = TinyHandle()
        rng = np.random.default_rng(15)
        draws = h.sample_tilde_batch(rng, 50)
        assert draws.shape == (50,) and set(draws.tolist()) <= {0, 1, 2}
        assert h.query_true_batch(np.array([2, 1])).tolist() == [2.0, 1.0]
        assert h.query_tilde_batch(np.array([0])).tolist() == [1.0]
