"""Sample-query trees: exactness invariants, sampling laws, update paths."""

import numpy as np
import pytest

from d2seed.oracle import empirical_distribution, tv_distance
from d2seed.sqtree import SqMatrix, SqVector, _padded_size, build_matrix


def _assert_internal_exactness(tree: np.ndarray, P: int):
    # every internal node must equal the float sum of its children, bit for bit
    for idx in range(1, P):
        assert tree[idx] == tree[2 * idx] + tree[2 * idx + 1]


class TestVectorBasics:
    def test_known_tree_layout(self):
        v = SqVector(np.array([1.0, 2.0, 2.0, 4.0]))
        assert v.tree.tolist() == [0.0, 25.0, 5.0, 20.0, 1.0, 4.0, 4.0, 16.0]
        assert v.norm2 == 25.0
        assert v.query(1) == 2.0

    def test_padding_sizes(self):
        assert [_padded_size(n) for n in (1, 2, 3, 4, 5, 8, 9)] == [1, 2, 4, 4, 8, 8, 16]
        with pytest.raises(ValueError):
            _padded_size(0)

    def test_signed_leaves_query_signed_sample_by_square(self):
        v = SqVector(np.array([-3.0, 0.0, 4.0]))
        assert v.query(0) == -3.0
        assert v.norm2 == 25.0
        rng = np.random.default_rng(0)
        draws = v.sample_batch(rng, 4000)
        assert set(np.unique(draws).tolist()) == {0, 2}
        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, [9 / 25, 0.0, 16 / 25]) < 0.03

    def test_single_element(self):
        v = SqVector(np.array([-2.0]))
        assert v.norm2 == 4.0
        rng = np.random.default_rng(1)
        assert v.sample(rng) == 0
        assert v.sample_batch(rng, 10).tolist() == [0] * 10

    def test_zero_vector_cannot_sample(self):
        v = SqVector(np.zeros(4))
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            v.sample(rng)
        with pytest.raises(ValueError):
            v.sample_batch(rng, 5)

    def test_padded_leaves_never_sampled(self):
        v = SqVector(np.array([1e-9, 1e-9, 1e-9]))  # P = 4, leaf 3 is padding
        rng = np.random.default_rng(2)
        draws = v.sample_batch(rng, 5000)
        assert int(draws.max()) <= 2

    def test_from_squares_stores_squares_exactly(self):
        squares = np.array([0.3, 0.7, 0.0, 1.9])  # none representable as x*x exactly
        v = SqVector.from_squares(squares)
        P = 4
        assert v.tree[P : P + 4].tolist() == squares.tolist()
        assert np.array_equal(v.values, np.sqrt(squares))
        with pytest.raises(ValueError):
            SqVector.from_squares(np.array([-1.0]))


class TestVectorUpdates:
    def test_update_recomputes_root_and_counts_touches(self):
        v = SqVector(np.array([1.0, 2.0, 2.0, 4.0]))
        v.update(1, -3.0)
        assert v.query(1) == -3.0
        assert v.norm2 == 30.0
        assert v.last_update_touches == 3  # leaf + 2 ancestors for P = 4
        _assert_internal_exactness(v.tree, 4)

    def test_update_touch_count_is_logarithmic(self):
        for n, expect in ((1, 1), (2, 2), (5, 4), (64, 7), (100, 8)):
            v = SqVector(np.zeros(n))
            v.update(n - 1, 1.0)
            assert v.last_update_touches == expect

    def test_internal_exactness_survives_random_updates(self):
        rng = np.random.default_rng(3)
        for trial in range(5):
            n = int(rng.integers(2, 40))
            v = SqVector(rng.normal(size=n))
            for _ in range(200):
                v.update(int(rng.integers(n)), float(rng.normal()))
            P = _padded_size(n)
            _assert_internal_exactness(v.tree, P)
            # padded leaves stay zero
            assert not v.tree[P + n :].any()

    def test_rebuild_matches_fresh_tree(self):
        rng = np.random.default_rng(4)
        vals = rng.normal(size=13)
        v = SqVector(vals)
        v.leaves[5] = 17.0
        v.rebuild()
        fresh = SqVector(v.leaves)
        assert np.array_equal(v.tree, fresh.tree)

    def test_update_out_of_range(self):
        v = SqVector(np.ones(3))
        with pytest.raises(IndexError):
            v.update(3, 1.0)


class TestVectorSamplingLaw:
    def test_tv_against_true_law(self):
        rng = np.random.default_rng(5)
        for trial in range(4):
            n = int(rng.integers(3, 50))
            vals = rng.normal(size=n) * rng.integers(0, 2, size=n)  # some exact zeros
            if not vals.any():
                vals[0] = 1.0
            v = SqVector(vals)
            draws = v.sample_batch(rng, 20000)
            law = vals**2 / (vals**2).sum()
            emp = empirical_distribution(draws, n)
            assert tv_distance(emp.probs, law) < 0.02
            assert not set(np.flatnonzero(vals == 0).tolist()) & set(draws.tolist())

    def test_scalar_and_batch_agree_in_law(self):
        vals = np.array([1.0, -2.0, 0.0, 3.0, 1.0])
        v = SqVector(vals)
        r1, r2 = np.random.default_rng(6), np.random.default_rng(7)
        one = np.array([v.sample(r1) for _ in range(8000)])
        many = v.sample_batch(r2, 8000)
        e1 = empirical_distribution(one, 5).probs
        e2 = empirical_distribution(many, 5).probs
        assert tv_distance(e1, e2) < 0.03


MAT = np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 2.0]])


class TestMatrix:
    def test_norms_and_frobenius(self):
        m = SqMatrix(MAT)
        assert m.row_norm2(0) == 25.0
        assert m.row_norm2(1) == 0.0
        assert m.row_norm2(2) == 5.0
        assert m.norm2 == 30.0
        assert m.row_norm2_batch(np.array([2, 0])).tolist() == [5.0, 25.0]
        assert build_matrix(MAT).norm2 == 30.0

    def test_row_sampling_law(self):
        m = SqMatrix(MAT)
        rng = np.random.default_rng(8)
        draws = m.sample_rows_batch(rng, 20000)
        assert 1 not in set(draws.tolist())
        emp = empirical_distribution(draws, 3)
        assert tv_distance(emp.probs, [25 / 30, 0.0, 5 / 30]) < 0.02

    def test_in_row_sampling_law(self):
        m = SqMatrix(MAT)
        rng = np.random.default_rng(9)
        draws = np.array([m.sample_in_row(0, rng) for _ in range(8000)])
        emp = empirical_distribution(draws, 2)
        assert tv_distance(emp.probs, [9 / 25, 16 / 25]) < 0.03
        with pytest.raises(ValueError):
            m.sample_in_row(1, rng)  # zero row

    def test_row_view(self):
        m = SqMatrix(MAT)
        view = m.row_view(2)
        assert view.n == 2
        assert view.norm2 == 5.0
        assert view.query(1) == 2.0
        assert np.array_equal(view.values, np.array([1.0, 2.0]))
        rng = np.random.default_rng(10)
        assert set(view.sample_batch(rng, 100).tolist()) <= {0, 1}

    def test_update_row_entry(self):
        m = SqMatrix(MAT)
        m.update_row_entry(2, 0, 5.0)
        assert m.query(2, 0) == 5.0
        assert m.row_norm2(2) == 29.0
        assert m.norm2 == 54.0
        # row-norm leaf square must hold the row root exactly, bit for bit
        assert m.row_norms.tree[m.row_norms._P + 2] == m._row_trees[2, 1]
        # touches: row path (P=2 -> 2 nodes) + norm path (P=4 -> 3 nodes)
        assert m.last_update_touches == 5
        with pytest.raises(IndexError):
            m.update_row_entry(3, 0, 1.0)
        with pytest.raises(IndexError):
            m.update_row_entry(0, 2, 1.0)

    def test_row_norm_consistency_under_random_updates(self):
        rng = np.random.default_rng(11)
        m = SqMatrix(rng.normal(size=(9, 5)))
        for _ in range(300):
            m.update_row_entry(int(rng.integers(9)), int(rng.integers(5)), float(rng.normal()))
        for i in range(9):
            assert m.row_norms.tree[m.row_norms._P + i] == m._row_trees[i, 1]
        direct = float((m.values[:9] ** 2).sum())
        assert m.norm2 == pytest.approx(direct, rel=1e-12)

    def test_append_row_within_capacity(self):
        m = SqMatrix(MAT, capacity=4)
        assert m.norm2 == 30.0
        idx = m.append_row(np.array([1.0, 1.0]))
        assert idx == 3 and m.n_rows == 4
        assert m.norm2 == 32.0
        rng = np.random.default_rng(12)
        assert 3 in set(m.sample_rows_batch(rng, 4000).tolist())
        with pytest.raises(ValueError):
            m.append_row(np.array([1.0, 1.0]))  # capacity exhausted
        with pytest.raises(ValueError):
            SqMatrix(MAT, capacity=4).append_row(np.ones(3))  # wrong width

    def test_validation(self):
        with pytest.raises(ValueError):
            SqMatrix(np.zeros(3))
        with pytest.raises(ValueError):
            SqMatrix(MAT, capacity=2)
