"""Neighbor profiles: exact tie grouping against an independent oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aknn.data import LabeledDataset
from aknn.neighbors import NeighborIndex


def make_dataset(rows, labels, alphabet=None):
    return LabeledDataset.from_labels(np.asarray(rows, dtype=float), labels, alphabet)


def brute_force_profile(features, label_ids, n_labels, query, metric):
    """Independent sort-and-group reimplementation (pure Python arithmetic).

    Distances are accumulated coordinate-by-coordinate in sequential order so
    exact float equality matches the production kernel's reduction.
    """
    dists = []
    for row in features:
        if metric == "euclidean":
            acc = 0.0
            for a, b in zip(row, query):
                acc += (a - b) * (a - b)
            dists.append(math.sqrt(acc))
        else:
            acc = 0.0
            for a, b in zip(row, query):
                acc += abs(a - b)
            dists.append(acc)
    order = sorted(range(len(dists)), key=lambda i: dists[i])
    radii, groups = [], []
    for i in order:
        if radii and dists[i] == radii[-1]:
            groups[-1].append(i)
        else:
            radii.append(dists[i])
            groups.append([i])
    cum = []
    running = [0] * n_labels
    defined_k = []
    total = 0
    for g in groups:
        for i in g:
            running[label_ids[i]] += 1
        total += len(g)
        cum.append(list(running))
        defined_k.append(total)
    return radii, cum, defined_k


class TestProfileExamples:
    def test_tie_group_counts(self):
        """Points at distances [1, 1, 2] with labels [+, +, -]."""
        ds = make_dataset([[1.0], [-1.0], [2.0]], ["pos", "pos", "neg"])
        prof = NeighborIndex(ds).profile([0.0])
        np.testing.assert_array_equal(prof.radii, [1.0, 2.0])
        np.testing.assert_array_equal(prof.defined_k, [2, 3])
        np.testing.assert_array_equal(prof.cum_counts, [[2, 0], [2, 1]])

    def test_distinct_distances_all_k_defined(self):
        ds = make_dataset([[1.0], [2.0], [4.0], [8.0]], ["a", "b", "a", "b"])
        prof = NeighborIndex(ds).profile([0.0])
        np.testing.assert_array_equal(prof.defined_k, [1, 2, 3, 4])

    def test_exclude_self_drops_exactly_one(self):
        ds = make_dataset([[0.0], [0.0], [1.0]], ["a", "b", "a"])
        prof = NeighborIndex(ds).profile([0.0], exclude_self=True)
        assert prof.n_total == 2
        assert prof.defined_k[-1] == 2
        # one zero-distance duplicate remains
        assert prof.radii[0] == 0.0

    def test_exclude_self_requires_matching_row(self):
        ds = make_dataset([[1.0]], ["a"])
        with pytest.raises(ValueError, match="exclude_self"):
            NeighborIndex(ds).profile([0.5], exclude_self=True)

    def test_single_point_dataset(self):
        ds = make_dataset([[3.0, 4.0]], ["only"])
        prof = NeighborIndex(ds).profile([0.0, 0.0])
        np.testing.assert_array_equal(prof.radii, [5.0])
        np.testing.assert_array_equal(prof.defined_k, [1])

    def test_max_k_truncates_after_first_reaching_group(self):
        ds = make_dataset([[1.0], [1.0], [2.0], [3.0]], ["a", "a", "a", "a"])
        prof = NeighborIndex(ds).profile([0.0], max_k=2)
        np.testing.assert_array_equal(prof.defined_k, [2])
        prof1 = NeighborIndex(ds).profile([0.0], max_k=1)
        # first group already holds >= 1 points
        np.testing.assert_array_equal(prof1.defined_k, [2])

    def test_dimension_mismatch(self):
        ds = make_dataset([[1.0, 2.0]], ["a"])
        with pytest.raises(ValueError, match="dimension"):
            NeighborIndex(ds).profile([0.0])

    def test_manhattan_metric(self):
        ds = make_dataset([[1.0, 1.0], [2.0, 0.0]], ["a", "b"])
        prof = NeighborIndex(ds, metric="manhattan").profile([0.0, 0.0])
        np.testing.assert_array_equal(prof.radii, [2.0])
        np.testing.assert_array_equal(prof.defined_k, [2])

    def test_build_determinism(self):
        rng = np.random.default_rng(0)
        ds = make_dataset(rng.normal(size=(40, 3)), list("ab") * 20)
        q = rng.normal(size=3)
        p1 = NeighborIndex(ds).profile(q)
        p2 = NeighborIndex(ds).profile(q)
        np.testing.assert_array_equal(p1.radii, p2.radii)
        np.testing.assert_array_equal(p1.cum_counts, p2.cum_counts)


class TestDeskScale:
    def test_large_build_and_query_complete_quickly(self):
        """Full-scan kernel at n=1e5, D=50: build plus a profile in seconds."""
        import time

        rng = np.random.default_rng(0)
        ds = LabeledDataset(rng.normal(size=(100_000, 50)),
                            rng.integers(0, 2, size=100_000), (0, 1))
        start = time.time()
        index = NeighborIndex(ds)
        prof = index.profile(rng.normal(size=50))
        elapsed = time.time() - start
        assert prof.defined_k[-1] == 100_000
        assert elapsed < 10.0, f"{elapsed:.1f}s"


coords = st.integers(min_value=-4, max_value=4)


@st.composite
def dataset_and_query(draw):
    n = draw(st.integers(min_value=1, max_value=200))
    dim = draw(st.integers(min_value=1, max_value=4))
    n_labels = draw(st.integers(min_value=2, max_value=3))
    # small-integer grids force plenty of exact distance ties
    feats = [[draw(coords) for _ in range(dim)] for _ in range(n)]
    labels = [draw(st.integers(min_value=0, max_value=n_labels - 1)) for _ in range(n)]
    query = [draw(coords) for _ in range(dim)]
    alphabet = tuple(range(n_labels))
    return feats, labels, alphabet, query


class TestProfileProperties:
    @settings(max_examples=100, deadline=None)
    @given(dataset_and_query(), st.sampled_from(["euclidean", "manhattan"]))
    def test_matches_brute_force_oracle(self, case, metric):
        feats, labels, alphabet, query = case
        ds = make_dataset(feats, labels, alphabet)
        prof = NeighborIndex(ds, metric=metric).profile(query)
        radii, cum, defined_k = brute_force_profile(
            feats, labels, len(alphabet), query, metric
        )
        np.testing.assert_array_equal(prof.radii, radii)
        np.testing.assert_array_equal(prof.cum_counts, cum)
        np.testing.assert_array_equal(prof.defined_k, defined_k)

    @settings(max_examples=100, deadline=None)
    @given(dataset_and_query())
    def test_structure_invariants(self, case):
        feats, labels, alphabet, query = case
        ds = make_dataset(feats, labels, alphabet)
        prof = NeighborIndex(ds).profile(query)
        assert np.all(np.diff(prof.radii) > 0)
        assert np.all(np.diff(prof.defined_k) > 0)
        assert np.all(np.diff(prof.cum_counts, axis=0) >= 0)
        np.testing.assert_array_equal(prof.cum_counts.sum(axis=1), prof.defined_k)
        assert prof.defined_k[-1] == len(feats)

    @settings(max_examples=100, deadline=None)
    @given(dataset_and_query(), st.integers(min_value=-20, max_value=20),
           st.sampled_from(["euclidean", "manhattan"]))
    def test_scale_invariance(self, case, exponent, metric):
        """Power-of-two scaling is exact in binary floating point, so tie
        groups and counts must not move at all."""
        feats, labels, alphabet, query = case
        scale = 2.0 ** exponent
        ds = make_dataset(feats, labels, alphabet)
        scaled = make_dataset((np.asarray(feats, dtype=float) * scale), labels, alphabet)
        p = NeighborIndex(ds, metric=metric).profile(query)
        ps = NeighborIndex(scaled, metric=metric).profile(np.asarray(query, dtype=float) * scale)
        np.testing.assert_array_equal(p.defined_k, ps.defined_k)
        np.testing.assert_array_equal(p.cum_counts, ps.cum_counts)

    @settings(max_examples=100, deadline=None)
    @given(dataset_and_query(), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, case, rnd):
        feats, labels, alphabet, query = case
        perm = list(range(len(feats)))
        rnd.shuffle(perm)
        ds = make_dataset(feats, labels, alphabet)
        dsp = make_dataset([feats[i] for i in perm], [labels[i] for i in perm], alphabet)
        p = NeighborIndex(ds).profile(query)
        pp = NeighborIndex(dsp).profile(query)
        np.testing.assert_array_equal(p.radii, pp.radii)
        np.testing.assert_array_equal(p.cum_counts, pp.cum_counts)
