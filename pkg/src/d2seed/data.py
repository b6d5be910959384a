"""Dataset loading, validation, and geometry diagnostics."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np


class DataFormatError(ValueError):
    """An input file could not be parsed into a dense float64 matrix."""


@dataclass(frozen=True)
class DataSet:
    """Immutable (n_points, n_dims) float64 row-vector matrix."""

    values: np.ndarray
    source: str = "<memory>"

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]

    @staticmethod
    def from_array(values, source: str = "<memory>") -> "DataSet":
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise DataFormatError(f"{source}: expected a 2-d array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataFormatError(f"{source}: empty dataset (shape {arr.shape})")
        if not np.isfinite(arr).all():
            bad = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise DataFormatError(f"{source}: non-finite value in row {bad}")
        arr.flags.writeable = False
        return DataSet(values=arr, source=source)


@dataclass(frozen=True)
class AspectReport:
    """Extremal interpoint distances and their ratio."""

    d_min: float
    d_max: float
    zeta: float
    duplicate_pairs: int
    n_points_used: int


def _parse_line(fields: list[str], line_no: int, source: str) -> list[float]:
    row = []
    for j, tok in enumerate(fields):
        try:
            row.append(float(tok))
        except ValueError:
            raise DataFormatError(
                f"{source}: line {line_no}: field {j + 1} ({tok!r}) is not numeric"
            ) from None
    return row


def load_csv(path: str, delimiter: str = ",") -> DataSet:
    """Parse a delimited numeric text file; a fully non-numeric first line is a header."""
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [tok.strip() for tok in line.split(delimiter)]
            if line_no == 1 and not any(_is_number(tok) for tok in fields):
                continue  # header row
            row = _parse_line(fields, line_no, path)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(
                    f"{path}: line {line_no}: expected {width} fields, found {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return DataSet.from_array(np.array(rows, dtype=np.float64), source=os.fspath(path))


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def load_raw(path: str, n_points: int, n_dims: int) -> DataSet:
    """Read little-endian float64 row-major binary with an exact size check."""
    expected = n_points * n_dims * 8
    actual = os.path.getsize(path)
    if actual != expected:
        raise DataFormatError(
            f"{path}: size {actual} bytes != {expected} expected for {n_points}x{n_dims} f64"
        )
    arr = np.fromfile(path, dtype="<f8").reshape(n_points, n_dims)
    return DataSet.from_array(arr, source=os.fspath(path))


def store_raw(ds: DataSet, path: str) -> None:
    """Write the dataset as little-endian float64 row-major binary (load_raw inverse)."""
    np.ascontiguousarray(ds.values, dtype="<f8").tofile(path)


def _pair_scan(values: np.ndarray):
    """Scan all unordered pairs; return (min nonzero d2, max d2, zero-distance pair count)."""
    n = values.shape[0]
    d2_min = math.inf
    d2_max = 0.0
    dup_pairs = 0
    for i in range(n - 1):
        diff = values[i + 1 :] - values[i]
        d2 = np.einsum("ij,ij->i", diff, diff)
        zeros = int(np.count_nonzero(d2 == 0.0))
        dup_pairs += zeros
        if zeros < d2.shape[0]:
            m = float(d2[d2 > 0.0].min())
            if m < d2_min:
                d2_min = m
        top = float(d2.max())
        if top > d2_max:
            d2_max = top
    return d2_min, d2_max, dup_pairs


def aspect_ratio(ds: DataSet, sample_size: int | None = None, seed: int = 0) -> AspectReport:
    """Exact extremal distances over all pairs, or over a uniform row subsample.

    The subsampled estimate (sample_size set) is advisory: d_min can only be
    overestimated and d_max underestimated by subsampling.
    """
    values = ds.values
    if sample_size is not None and sample_size < ds.n_points:
        rng = np.random.default_rng(seed)
        idx = rng.choice(ds.n_points, size=sample_size, replace=False)
        values = values[np.sort(idx)]
    n = values.shape[0]
    if n < 2:
        raise ValueError("aspect ratio needs at least 2 points")
    d2_min, d2_max, dup_pairs = _pair_scan(values)
    if not math.isfinite(d2_min):
        raise ValueError("aspect ratio undefined: all points coincide")
    d_min = math.sqrt(d2_min)
    d_max = math.sqrt(d2_max)
    return AspectReport(
        d_min=d_min,
        d_max=d_max,
        zeta=d_max / d_min,
        duplicate_pairs=dup_pairs,
        n_points_used=n,
    )


def scale_to_unit_min_distance(ds: DataSet) -> tuple[DataSet, float]:
    """Divide all coordinates by d_min; returns (scaled dataset, the divisor)."""
    report = aspect_ratio(ds)
    scaled = DataSet.from_array(ds.values / report.d_min, source=ds.source)
    return scaled, report.d_min


def gaussian_mixture(
    n_points: int,
    n_dims: int,
    n_components: int,
    separation: float,
    seed: int = 0,
    noise: float = 1.0,
) -> DataSet:
    """Equal-weight spherical Gaussian mixture with means at radius `separation`.

    When n_components <= n_dims the mean directions are orthogonalized, so
    every pair of components sits at the same distance separation * sqrt(2);
    benchmark costs then depend on how many components a seeding covers, not
    on which ones. Larger separation/noise stretches the interpoint-distance
    range and with it the aspect ratio.
    """
    if n_components < 1 or n_points < n_components:
        raise ValueError("need n_points >= n_components >= 1")
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(n_components, n_dims))
    if n_components <= n_dims:
        q, _ = np.linalg.qr(means.T)
        means = q.T
    else:
        means /= np.linalg.norm(means, axis=1, keepdims=True)
    means *= separation
    assign = rng.integers(0, n_components, size=n_points)
    assign[:n_components] = np.arange(n_components)  # every component occupied
    points = means[assign] + rng.normal(size=(n_points, n_dims)) * noise
    return DataSet.from_array(points, source=f"<mixture:{n_components}x{n_dims}>")
