"""Sample-query trees: squared-magnitude sampling with O(log) updates.

A vector v is stored as signed leaves plus a complete binary tree whose
internal nodes hold sums of squares, padded to a power of two. The tree
answers in one pass:

  query(i)   -> v(i)                                   O(1)
  norm2      -> ||v||^2  (root)                        O(1)
  sample(rng)-> index i with prob v(i)^2 / ||v||^2     O(log n)
  update(i,x)-> point write touching one root-to-leaf path

Every internal node is kept *exactly* equal to the float sum of its two
children (build and update both recompute parents from children), which makes
the sampling descent sound: padded/zero subtrees are never entered.
"""

from __future__ import annotations

import numpy as np


def _padded_size(n: int) -> int:
    if n < 1:
        raise ValueError("need at least one leaf")
    return 1 << max(0, (n - 1).bit_length())


def _build_trees(leaf_squares: np.ndarray) -> np.ndarray:
    """Batch-build trees for (rows, P) leaf squares; returns (rows, 2P) arrays."""
    rows, P = leaf_squares.shape
    tree = np.zeros((rows, 2 * P), dtype=np.float64)
    tree[:, P:] = leaf_squares
    w = P // 2
    while w >= 1:
        tree[:, w : 2 * w] = tree[:, 2 * w : 4 * w : 2] + tree[:, 2 * w + 1 : 4 * w : 2]
        w //= 2
    return tree


def _set_leaf_square(tree: np.ndarray, P: int, i: int, square: float) -> int:
    """Write one leaf square and recompute its ancestors; returns nodes touched."""
    idx = P + i
    tree[idx] = square
    touched = 1
    while idx > 1:
        idx >>= 1
        tree[idx] = tree[2 * idx] + tree[2 * idx + 1]
        touched += 1
    return touched


def _descend(tree: np.ndarray, P: int, u: float) -> int:
    """Walk the prefix u down to a leaf: left iff u < left-child sum."""
    idx = 1
    while idx < P:
        left = tree[2 * idx]
        if u < left:
            idx = 2 * idx
        else:
            u -= left
            idx = 2 * idx + 1
    return idx - P


def _descend_batch(tree: np.ndarray, P: int, u: np.ndarray) -> np.ndarray:
    """Vectorized descent for a batch of prefixes into one tree."""
    idx = np.ones(u.shape[0], dtype=np.int64)
    for _ in range(P.bit_length() - 1):
        left = tree[2 * idx]
        go_right = u >= left
        u = u - left * go_right
        idx = 2 * idx + go_right
    return idx - P


class SqVector:
    """Sample-query access to one vector."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("SqVector takes a 1-d array")
        self.n = values.shape[0]
        self._P = _padded_size(self.n)
        self.leaves = values.copy()
        padded = np.zeros(self._P, dtype=np.float64)
        padded[: self.n] = self.leaves * self.leaves
        self.tree = _build_trees(padded[None, :])[0]
        self.last_update_touches = 0

    @classmethod
    def from_squares(cls, squares) -> "SqVector":
        """Build so the stored leaf squares are exactly `squares` (values = sqrt)."""
        squares = np.asarray(squares, dtype=np.float64)
        if squares.ndim != 1 or (squares < 0).any():
            raise ValueError("from_squares takes a 1-d nonnegative array")
        obj = cls.__new__(cls)
        obj.n = squares.shape[0]
        obj._P = _padded_size(obj.n)
        obj.leaves = np.sqrt(squares)
        padded = np.zeros(obj._P, dtype=np.float64)
        padded[: obj.n] = squares
        obj.tree = _build_trees(padded[None, :])[0]
        obj.last_update_touches = 0
        return obj

    @property
    def norm2(self) -> float:
        return float(self.tree[1])

    @property
    def values(self) -> np.ndarray:
        return self.leaves

    def query(self, i: int) -> float:
        return float(self.leaves[i])

    def update(self, i: int, x: float) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} out of range for length {self.n}")
        self.leaves[i] = x
        self.last_update_touches = _set_leaf_square(self.tree, self._P, i, x * x)

    def _update_square(self, i: int, square: float) -> None:
        """Write leaf i so its stored square is exactly `square` (value = sqrt)."""
        self.leaves[i] = np.sqrt(square)
        self.last_update_touches = _set_leaf_square(self.tree, self._P, i, square)

    def rebuild(self) -> None:
        padded = np.zeros(self._P, dtype=np.float64)
        padded[: self.n] = self.leaves * self.leaves
        self.tree = _build_trees(padded[None, :])[0]

    def sample(self, rng: np.random.Generator) -> int:
        root = self.tree[1]
        if root <= 0.0:
            raise ValueError("cannot sample from a zero vector")
        return _descend(self.tree, self._P, rng.random() * root)

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        root = self.tree[1]
        if root <= 0.0:
            raise ValueError("cannot sample from a zero vector")
        return _descend_batch(self.tree, self._P, rng.random(size) * root)


class RowView:
    """Sample-query access to one matrix row (shares the matrix storage)."""

    def __init__(self, matrix: "SqMatrix", i: int):
        self._m = matrix
        self._i = i

    @property
    def n(self) -> int:
        return self._m.n_dims

    @property
    def norm2(self) -> float:
        return float(self._m._row_trees[self._i, 1])

    @property
    def values(self) -> np.ndarray:
        return self._m.values[self._i]

    def query(self, j: int) -> float:
        return float(self._m.values[self._i, j])

    def sample(self, rng: np.random.Generator) -> int:
        tree = self._m._row_trees[self._i]
        if tree[1] <= 0.0:
            raise ValueError("cannot sample from a zero row")
        return _descend(tree, self._m._Pd, rng.random() * tree[1])

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        tree = self._m._row_trees[self._i]
        if tree[1] <= 0.0:
            raise ValueError("cannot sample from a zero row")
        return _descend_batch(tree, self._m._Pd, rng.random(size) * tree[1])


class SqMatrix:
    """Sample-query access to a row matrix.

    Per-row trees give in-row sampling; a vector of row norms (stored so each
    leaf's square is exactly the row-tree root) gives row sampling proportional
    to squared row norms and a Frobenius-norm root.
    """

    def __init__(self, values, capacity: int | None = None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("SqMatrix takes a 2-d array")
        n, d = values.shape
        if capacity is None:
            capacity = n
        if capacity < n:
            raise ValueError(f"capacity {capacity} < {n} rows")
        self.n_rows = n
        self.n_dims = d
        self.capacity = capacity
        self._Pd = _padded_size(d)
        self.values = np.zeros((capacity, d), dtype=np.float64)
        self.values[:n] = values
        padded = np.zeros((capacity, self._Pd), dtype=np.float64)
        padded[:n, :d] = values * values
        self._row_trees = _build_trees(padded)
        self.row_norms = SqVector.from_squares(self._row_trees[:, 1].copy())
        self.last_update_touches = 0

    @classmethod
    def build(cls, values, capacity: int | None = None) -> "SqMatrix":
        return cls(values, capacity=capacity)

    @property
    def norm2(self) -> float:
        """Squared Frobenius norm."""
        return self.row_norms.norm2

    def query(self, i: int, j: int) -> float:
        return float(self.values[i, j])

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def row_norm2(self, i: int) -> float:
        return float(self._row_trees[i, 1])

    def row_norm2_batch(self, idx: np.ndarray) -> np.ndarray:
        return self._row_trees[idx, 1]

    def row_view(self, i: int) -> RowView:
        return RowView(self, i)

    def update_row_entry(self, i: int, j: int, x: float) -> None:
        if not 0 <= i < self.n_rows:
            raise IndexError(f"row {i} out of range for {self.n_rows} rows")
        if not 0 <= j < self.n_dims:
            raise IndexError(f"column {j} out of range for {self.n_dims} dims")
        self.values[i, j] = x
        row_touches = _set_leaf_square(self._row_trees[i], self._Pd, j, x * x)
        self.row_norms._update_square(i, float(self._row_trees[i, 1]))
        self.last_update_touches = row_touches + self.row_norms.last_update_touches

    def append_row(self, row_values) -> int:
        """Add one row in the preallocated capacity; returns its index."""
        if self.n_rows >= self.capacity:
            raise ValueError(f"capacity {self.capacity} exhausted")
        row_values = np.asarray(row_values, dtype=np.float64)
        if row_values.shape != (self.n_dims,):
            raise ValueError(f"expected shape ({self.n_dims},), got {row_values.shape}")
        i = self.n_rows
        self.values[i] = row_values
        padded = np.zeros((1, self._Pd), dtype=np.float64)
        padded[0, : self.n_dims] = row_values * row_values
        self._row_trees[i] = _build_trees(padded)[0]
        self.row_norms._update_square(i, float(self._row_trees[i, 1]))
        self.n_rows = i + 1
        return i

    def sample_row(self, rng: np.random.Generator) -> int:
        return self.row_norms.sample(rng)

    def sample_rows_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.row_norms.sample_batch(rng, size)

    def sample_in_row(self, i: int, rng: np.random.Generator) -> int:
        return self.row_view(i).sample(rng)


def build_matrix(values, capacity: int | None = None) -> SqMatrix:
    """Build sample-query access for a row matrix."""
    return SqMatrix(values, capacity=capacity)
