"""Exact neighbor enumeration.

For a query point, a :class:`NeighborProfile` lists the sorted distinct
distances to the training set together with cumulative per-label counts.
Equal distances are grouped by exact floating-point equality, so some
neighborhood sizes are simply not realizable; ``defined_k`` enumerates the
ones that are. Downstream decision rules only ever read profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset

METRICS = ("euclidean", "manhattan")


@dataclass(frozen=True)
class NeighborProfile:
    """Distance groups around one query.

    radii        strictly increasing distances, one per tie group
    cum_counts   (groups, |alphabet|) cumulative per-label counts
    defined_k    cumulative totals (the realizable neighborhood sizes)
    n_total      points considered (n, or n-1 when the query excluded itself)
    alphabet     label identifiers, in dataset order
    """

    radii: np.ndarray
    cum_counts: np.ndarray
    defined_k: np.ndarray
    n_total: int
    alphabet: tuple

    @property
    def n_groups(self) -> int:
        return len(self.radii)

    def truncate(self, max_k: int) -> "NeighborProfile":
        """Drop groups past the first cumulative total >= max_k."""
        if max_k < 1:
            raise ValueError("max_k must be positive")
        hits = np.flatnonzero(self.defined_k >= max_k)
        if hits.size == 0:
            return self
        stop = hits[0] + 1
        return NeighborProfile(
            self.radii[:stop],
            self.cum_counts[:stop],
            self.defined_k[:stop],
            self.n_total,
            self.alphabet,
        )


class NeighborIndex:
    """Immutable full-scan index over a contiguous copy of the features.

    Queries are read-only and may run concurrently. Distances are exact;
    squared Euclidean is used for grouping (the monotone map preserves
    exact-equality tie groups) with true distances materialized in radii.
    """

    def __init__(self, dataset: LabeledDataset, metric: str = "euclidean"):
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        if dataset.n < 1:
            raise ValueError("empty dataset")
        self.metric = metric
        self.alphabet = dataset.alphabet
        self._features = np.ascontiguousarray(dataset.features, dtype=np.float64)
        self._label_ids = dataset.label_ids.copy()
        self._features.setflags(write=False)
        self._label_ids.setflags(write=False)

    @property
    def n(self) -> int:
        return self._features.shape[0]

    @property
    def dim(self) -> int:
        return self._features.shape[1]

    def _keys(self, query: np.ndarray) -> np.ndarray:
        # comparison keys: squared distance (euclidean) or L1 distance
        diff = self._features - query
        if self.metric == "euclidean":
            return (diff * diff).sum(axis=1)
        return np.abs(diff).sum(axis=1)

    def profile(self, query, exclude_self: bool = False, max_k: int | None = None) -> NeighborProfile:
        """Group all training points by exact distance from the query.

        With ``exclude_self``, exactly one training point at distance zero is
        omitted (the query must coincide with a training row).
        """
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if query.shape[0] != self.dim:
            raise ValueError(f"query has dimension {query.shape[0]}, index has {self.dim}")
        keys = self._keys(query)
        label_ids = self._label_ids
        if exclude_self:
            zero = np.flatnonzero(keys == 0.0)
            if zero.size == 0:
                raise ValueError("exclude_self: query does not match any training row")
            keep = np.ones(self.n, dtype=bool)
            keep[zero[0]] = False
            keys = keys[keep]
            label_ids = label_ids[keep]
            if keys.size == 0:
                raise ValueError("exclude_self left an empty profile")

        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        sorted_labels = label_ids[order]

        starts = np.flatnonzero(np.concatenate(([True], np.diff(sorted_keys) != 0)))
        group_of_point = np.cumsum(np.concatenate(([0], (np.diff(sorted_keys) != 0).astype(np.intp))))
        n_groups = len(starts)
        n_labels = len(self.alphabet)

        counts = np.zeros((n_groups, n_labels), dtype=np.int64)
        np.add.at(counts, (group_of_point, sorted_labels), 1)
        cum_counts = np.cumsum(counts, axis=0)
        defined_k = cum_counts.sum(axis=1)

        group_keys = sorted_keys[starts]
        radii = np.sqrt(group_keys) if self.metric == "euclidean" else group_keys

        prof = NeighborProfile(radii, cum_counts, defined_k, int(keys.size), self.alphabet)
        if max_k is not None:
            prof = prof.truncate(max_k)
        return prof


def build(dataset: LabeledDataset, metric: str = "euclidean") -> NeighborIndex:
    return NeighborIndex(dataset, metric)
