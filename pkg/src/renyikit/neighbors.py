"""Sample container and exact nearest-neighbor queries.

The index wraps a scipy cKDTree; queries are exact, Euclidean, and
deterministic: neighbors come back sorted by distance with ties broken by
the smaller sample index, so every downstream estimate is reproducible.
The query point itself is never among its own neighbors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, DuplicatePoints, IndexOutOfRange, MTooLarge


@dataclass(frozen=True)
class Dataset:
    """n sample points in R^d, one row per point."""

    points: np.ndarray
    source: str | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise DimensionMismatch(
                f"points must be a 2-d array (n, d), got ndim={pts.ndim}"
            )
        if pts.shape[0] < 2:
            raise ValueError("need at least 2 samples (every point needs a neighbor)")
        if pts.shape[1] < 1:
            raise DimensionMismatch("dimension must be >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample coordinates must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    @classmethod
    def from_csv(cls, path):
        """Load one sample per row, d numeric columns, optional header row."""
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
        skip = 0
        try:
            [float(tok) for tok in first.strip().split(",") if tok != ""]
        except ValueError:
            skip = 1
        pts = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
        return cls(pts, source=f"csv:{path}")


def truncation_size(n, k):
    """Number of neighbors entering every local sum: max(k, ceil(ln n)),
    capped at n - 1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n - 1:
        raise MTooLarge(f"k={k} exceeds n-1={n - 1}")
    return min(max(k, math.ceil(math.log(n))), n - 1)


@dataclass(frozen=True)
class NeighborList:
    """The m nearest samples to sample `center`, nearest first."""

    center: int
    indices: np.ndarray
    distances: np.ndarray

    @property
    def m(self):
        return len(self.indices)

    @property
    def entries(self):
        return list(zip(self.indices.tolist(), self.distances.tolist()))


class NeighborIndex:
    """Immutable exact k-NN index over a Dataset (safe for concurrent reads)."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self._tree = cKDTree(dataset.points)
        # Exact duplicates would make rho = 0 possible; reject them here.
        dd, ii = self._tree.query(dataset.points, k=2)
        dup = np.nonzero(dd[:, 1] == 0.0)[0]
        if dup.size:
            i = int(dup[0])
            j = int(ii[i, 1])
            raise DuplicatePoints(min(i, j), max(i, j))

    @property
    def n(self):
        return self.dataset.n

    @property
    def d(self):
        return self.dataset.d

    def _check_query(self, i, m):
        n = self.n
        if not (0 <= i < n):
            raise IndexOutOfRange(f"sample index {i} outside [0, {n})")
        if m < 1 or m > n - 1:
            raise MTooLarge(f"m={m} outside [1, {n - 1}]")

    def knn(self, i, m):
        """The m nearest samples to sample i (never i itself), sorted by
        (distance, index)."""
        self._check_query(i, m)
        n = self.n
        kq = min(n, m + 2)
        while True:
            dist, idx = self._tree.query(self.dataset.points[i], k=kq)
            keep = idx != i
            dist, idx = dist[keep], idx[keep]
            # Expand while a distance tie straddles the m-th cutoff, so the
            # index tie-break sees every candidate at the boundary radius.
            if kq >= n or (len(dist) > m and dist[m - 1] != dist[m]):
                break
            kq = min(n, kq * 2)
        order = np.lexsort((idx, dist))[:m]
        return NeighborList(
            center=i, indices=idx[order].copy(), distances=dist[order].copy()
        )

    def knn_all(self, m):
        """Batched knn for every sample: returns (indices, distances), each
        of shape (n, m), rows sorted by (distance, index)."""
        n = self.n
        if m < 1 or m > n - 1:
            raise MTooLarge(f"m={m} outside [1, {n - 1}]")
        kq = min(n, m + 2)
        dist, idx = self._tree.query(self.dataset.points, k=kq)
        rows = np.arange(n)
        is_self = idx == rows[:, None]
        assert is_self.any(axis=1).all(), "self match missing from k-NN query"
        self_pos = np.argmax(is_self, axis=1)
        mask = np.ones_like(idx, dtype=bool)
        mask[rows, self_pos] = False
        cand_d = dist[mask].reshape(n, kq - 1)
        cand_i = idx[mask].reshape(n, kq - 1)
        order = np.lexsort((cand_i, cand_d), axis=1)
        cand_d = np.take_along_axis(cand_d, order, axis=1)
        cand_i = np.take_along_axis(cand_i, order, axis=1)
        out_d = cand_d[:, :m].copy()
        out_i = cand_i[:, :m].copy()
        if kq - 1 > m:
            # Rows with a tie at the cutoff get the careful per-point path.
            tied = np.nonzero(cand_d[:, m - 1] == cand_d[:, m])[0]
            for i in tied:
                nl = self.knn(int(i), m)
                out_d[i] = nl.distances
                out_i[i] = nl.indices
        return out_i, out_d

    def rho(self, i, k):
        """Distance from sample i to its k-th nearest neighbor."""
        return float(self.knn(i, k).distances[k - 1])


def build_index(dataset: Dataset) -> NeighborIndex:
    return NeighborIndex(dataset)
