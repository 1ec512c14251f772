"""Decision rules: thresholds, abstention, baselines, evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aknn.classify import (
    Practical,
    TheoryDefault,
    TheoryVC,
    delta_threshold,
    evaluate,
    knn_predict,
    predict_binary,
    predict_multiclass,
    resolve_single_label,
)
from aknn.data import LabeledDataset
from aknn.neighbors import NeighborIndex, NeighborProfile

# frozen with a 50-digit Decimal.ln() computation, independent of math.log
THEORY_VC_N100_K25 = 0.6786140424415112


def profile_from_sorted_labels(label_seq, alphabet):
    """Profile for tie-free points whose labels, nearest first, are label_seq."""
    idx = {lab: i for i, lab in enumerate(alphabet)}
    counts = np.zeros((len(label_seq), len(alphabet)), dtype=np.int64)
    for row, lab in enumerate(label_seq):
        counts[row:, idx[lab]] += 1
    defined_k = np.arange(1, len(label_seq) + 1, dtype=np.int64)
    radii = np.arange(1, len(label_seq) + 1, dtype=np.float64)
    return NeighborProfile(radii, counts, defined_k, len(label_seq), tuple(alphabet))


class TestDeltaThreshold:
    def test_theory_default_unit_case(self):
        """ln 1 = 0 and ln(1/e^-1) = 1 gives exactly 1."""
        rule = TheoryDefault(c1=1.0, delta=math.exp(-1))
        assert delta_threshold(rule, 1, 1) == pytest.approx(1.0, abs=1e-12)

    def test_practical(self):
        assert delta_threshold(Practical(2.0), 10, 4) == 1.0

    def test_theory_vc_frozen_value(self):
        rule = TheoryVC(c1=1.0, delta=0.1, d0=2)
        assert delta_threshold(rule, 100, 25) == pytest.approx(THEORY_VC_N100_K25, abs=1e-9)

    def test_theory_requires_k_at_most_n(self):
        with pytest.raises(ValueError):
            delta_threshold(TheoryDefault(1.0, 0.5), 5, 6)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            Practical(-0.5)
        with pytest.raises(ValueError):
            TheoryDefault(0.0, 0.5)
        with pytest.raises(ValueError):
            TheoryDefault(1.0, 1.0)
        with pytest.raises(ValueError):
            TheoryVC(1.0, 0.5, 0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=0.01, max_value=10),
        st.floats(min_value=0.01, max_value=0.99),
        st.integers(min_value=1, max_value=4),
        st.integers(min_value=50, max_value=10_000),
    )
    def test_monotonicities(self, c1, delta, d0, n):
        """Strictly decreasing in k; nondecreasing in 1/delta, c1, d0, a."""
        ks = np.arange(1, 51)
        for rule in (TheoryDefault(c1, delta), TheoryVC(c1, delta, d0), Practical(c1)):
            vals = rule.thresholds(n, ks)
            assert np.all(np.diff(vals) < 0)
        assert delta_threshold(TheoryDefault(c1, delta), n, 5) <= delta_threshold(
            TheoryDefault(c1, delta / 2), n, 5
        )
        assert delta_threshold(TheoryDefault(c1, delta), n, 5) <= delta_threshold(
            TheoryDefault(c1 * 2, delta), n, 5
        )
        assert delta_threshold(TheoryVC(c1, delta, d0), n, 5) <= delta_threshold(
            TheoryVC(c1, delta, d0 + 1), n, 5
        )
        assert delta_threshold(Practical(c1), n, 5) <= delta_threshold(Practical(c1 * 2), n, 5)


class TestPredictBinary:
    ALPHABET = ("+", "-")

    def test_fires_at_k1(self):
        prof = profile_from_sorted_labels(["+", "+", "-", "+", "+"], self.ALPHABET)
        pred = predict_binary(prof, Practical(0.9))
        assert pred.labels == ("+",)
        assert pred.chosen_k == 1
        assert pred.margin == pytest.approx(1.0 - 0.9)

    def test_waits_for_k2(self):
        """k=1 bias 1 fails 1.2; k=2 bias 1 clears 1.2/sqrt(2)."""
        prof = profile_from_sorted_labels(["+", "+", "-", "+", "+"], self.ALPHABET)
        pred = predict_binary(prof, Practical(1.2))
        assert pred.labels == ("+",)
        assert pred.chosen_k == 2

    def test_abstains_when_nothing_clears(self):
        prof = profile_from_sorted_labels(["+", "-", "+", "-"], self.ALPHABET)
        pred = predict_binary(prof, Practical(2.0))
        assert pred.is_abstain
        assert pred.chosen_k is None and pred.margin is None

    def test_negative_side(self):
        prof = profile_from_sorted_labels(["-", "-", "-"], self.ALPHABET)
        pred = predict_binary(prof, Practical(0.5))
        assert pred.labels == ("-",)
        assert pred.chosen_k == 1

    def test_ties_with_threshold_do_not_trigger(self):
        """Strict inequality: |bias|=1 vs threshold exactly 1 at k=1."""
        prof = profile_from_sorted_labels(["+", "+", "+", "+"], self.ALPHABET)
        pred = predict_binary(prof, Practical(1.0))
        assert pred.chosen_k == 2  # k=1: 1 > 1 is false; k=2: 1 > 0.707...

    def test_rejects_non_binary_alphabet(self):
        prof = profile_from_sorted_labels(["a", "b", "c"], ("a", "b", "c"))
        with pytest.raises(ValueError, match="binary"):
            predict_binary(prof, Practical(1.0))

    def test_chosen_k_respects_tie_groups(self):
        ds = LabeledDataset.from_labels(
            np.array([[1.0], [-1.0], [2.0]]), ["+", "+", "-"], ("+", "-")
        )
        prof = NeighborIndex(ds).profile([0.0])
        pred = predict_binary(prof, Practical(0.5))
        assert pred.chosen_k == 2  # k=1 is undefined here


class TestPredictMulticlass:
    def test_three_label_scan(self):
        """|Y|=3, nearest labels [a, a, ...]: k=1 fails 0.8, k=2 clears."""
        prof = profile_from_sorted_labels(["a", "a", "b", "c"], ("a", "b", "c"))
        pred = predict_multiclass(prof, Practical(0.8))
        assert pred.labels == ("a",)
        assert pred.chosen_k == 2

    def test_uniform_counts_abstain(self):
        """Tie groups with balanced labels: share - 1/|Y| is 0 at every
        defined k, which never clears a positive threshold."""
        prof = NeighborProfile(
            radii=np.array([1.0, 2.0]),
            cum_counts=np.array([[1, 1], [2, 2]]),
            defined_k=np.array([2, 4]),
            n_total=4,
            alphabet=("a", "b"),
        )
        assert predict_multiclass(prof, Practical(0.1)).is_abstain

    def test_multilabel_outcome_possible(self):
        """At the triggering k every qualifying label is returned."""
        prof = NeighborProfile(
            radii=np.array([1.0]),
            cum_counts=np.array([[1, 1, 0]]),
            defined_k=np.array([2]),
            n_total=2,
            alphabet=("a", "b", "c"),
        )
        # k=2: a and b both have share 1/2, statistic 1/6 > 0.1/sqrt(2)
        pred = predict_multiclass(prof, Practical(0.1))
        assert pred.labels == ("a", "b")
        assert pred.chosen_k == 2

    def test_binary_bridge_on_example(self):
        """Two-label scan with a equals binary scan with 2a, here both at k=2."""
        prof = profile_from_sorted_labels(["+", "+", "-", "+", "+"], ("+", "-"))
        multi = predict_multiclass(prof, Practical(0.6))
        binary = predict_binary(prof, Practical(1.2))
        assert multi.labels == binary.labels == ("+",)
        assert multi.chosen_k == binary.chosen_k == 2


class TestResolveSingleLabel:
    def test_nearest_neighbor_wins_tie_free(self):
        prof = profile_from_sorted_labels(["a", "b", "b", "b"], ("a", "b"))
        assert resolve_single_label(prof) == "a"

    def test_single_label_dataset(self):
        prof = profile_from_sorted_labels(["z", "z"], ("z",))
        assert resolve_single_label(prof) == "z"

    def test_alphabet_order_breaks_ties(self):
        prof = profile_from_sorted_labels(["b", "a", "a", "b"], ("a", "b"))
        # count sequences per label are symmetric by k=4; scores tie at k=1? no:
        # nearest is b, so b scores 1.0 at k=1 and wins; flip the alphabet to
        # confirm ordering only matters on exact ties
        assert resolve_single_label(prof) == "b"
        sym = profile_from_sorted_labels(["a", "b", "b", "a"], ("a", "b"))
        sym2 = profile_from_sorted_labels(["b", "a", "a", "b"], ("b", "a"))
        assert resolve_single_label(sym) == "a"
        assert resolve_single_label(sym2) == "b"

    def test_significance_score_flag(self):
        prof = profile_from_sorted_labels(["a", "b", "b", "b", "b"], ("a", "b"))
        assert resolve_single_label(prof, score="significance") == "b"


class TestKnnPredict:
    def test_one_nn(self):
        prof = profile_from_sorted_labels(["b", "a", "a"], ("a", "b"))
        assert knn_predict(prof, 1) == "b"

    def test_majority(self):
        prof = profile_from_sorted_labels(["+", "+", "-"], ("+", "-"))
        assert knn_predict(prof, 3) == "+"

    def test_tie_rolls_to_next_defined_k(self):
        ds = LabeledDataset.from_labels(
            np.array([[1.0], [-1.0], [2.0]]), ["+", "+", "-"], ("+", "-")
        )
        prof = NeighborIndex(ds).profile([0.0])
        assert knn_predict(prof, 1) == "+"  # evaluated at the k=2 group

    def test_majority_tie_breaks_by_alphabet(self):
        prof = profile_from_sorted_labels(["a", "b"], ("a", "b"))
        assert knn_predict(prof, 2) == "a"
        prof2 = profile_from_sorted_labels(["a", "b"], ("b", "a"))
        assert knn_predict(prof2, 2) == "b"

    def test_k_beyond_profile_errors(self):
        prof = profile_from_sorted_labels(["a", "b"], ("a", "b"))
        with pytest.raises(ValueError, match="exceeds"):
            knn_predict(prof, 3)


def tie_free_dataset(rng, n, n_labels=2):
    """Random 1-d features, distinct with probability 1."""
    feats = rng.normal(size=(n, 1))
    labels = rng.integers(0, n_labels, size=n)
    return LabeledDataset(feats, labels, tuple(range(n_labels)))


class TestEvaluate:
    def test_a0_reduces_to_1nn(self):
        rng = np.random.default_rng(0)
        train = tie_free_dataset(rng, 60)
        queries = tie_free_dataset(rng, 25)
        report = evaluate(train, queries, Practical(0.0))
        assert report.coverage == 1.0
        index = NeighborIndex(train)
        hits = sum(
            knn_predict(index.profile(queries.features[i]), 1)
            == queries.alphabet[queries.label_ids[i]]
            for i in range(queries.n)
        )
        assert report.accuracy_on_predicted == hits / queries.n
        assert all(out.chosen_k == 1 for out in report.per_query)

    def test_forced_abstention_has_no_accuracy(self):
        rng = np.random.default_rng(1)
        train = tie_free_dataset(rng, 40)
        queries = tie_free_dataset(rng, 10)
        report = evaluate(train, queries, Practical(50.0), max_k=1)
        assert report.coverage == 0.0
        assert report.accuracy_on_predicted is None

    def test_leave_one_out_bookkeeping(self):
        rng = np.random.default_rng(2)
        ds = tie_free_dataset(rng, 30)
        report = evaluate(ds, ds, Practical(0.0), exclude_self=True)
        assert report.n_queries == ds.n
        assert report.coverage == 1.0

    def test_resolve_forces_full_coverage(self):
        rng = np.random.default_rng(3)
        train = tie_free_dataset(rng, 50)
        queries = tie_free_dataset(rng, 20)
        report = evaluate(train, queries, Practical(40.0), resolve=True)
        assert report.coverage == 1.0
        assert report.n_predicted == queries.n

    def test_alphabet_mismatch(self):
        rng = np.random.default_rng(4)
        train = tie_free_dataset(rng, 10)
        queries = LabeledDataset(train.features, train.label_ids, ("x", "y"))
        with pytest.raises(ValueError, match="alphabet"):
            evaluate(train, queries, Practical(1.0))

    def test_multiclass_multilabel_counted_separately(self):
        train = LabeledDataset.from_labels(
            np.array([[1.0], [-1.0], [2.0], [-2.0], [3.0]]),
            ["a", "b", "a", "b", "c"],
            ("a", "b", "c"),
        )
        queries = LabeledDataset.from_labels(np.array([[0.0]]), ["a"], ("a", "b", "c"))
        report = evaluate(train, queries, Practical(0.1), mode="multiclass")
        assert report.n_multilabel == 1
        assert report.n_predicted == 0
        assert report.coverage == 0.0
        assert report.n_multilabel_hits == 1


label_seq = st.lists(st.sampled_from(["+", "-"]), min_size=1, max_size=40)
a_values = st.floats(min_value=0.0, max_value=3.0)


class TestRuleProperties:
    @settings(max_examples=100, deadline=None)
    @given(label_seq, a_values, a_values)
    def test_coverage_and_chosen_k_monotone_in_a(self, seq, a1, a2):
        """Raising a can only delay or remove the decision."""
        a_lo, a_hi = sorted((a1, a2))
        prof = profile_from_sorted_labels(seq, ("+", "-"))
        lo = predict_binary(prof, Practical(a_lo))
        hi = predict_binary(prof, Practical(a_hi))
        if hi.labels is not None:
            assert lo.labels is not None
            assert lo.chosen_k <= hi.chosen_k

    @settings(max_examples=100, deadline=None)
    @given(label_seq, a_values)
    def test_chosen_k_is_minimal(self, seq, a):
        prof = profile_from_sorted_labels(seq, ("+", "-"))
        pred = predict_binary(prof, Practical(a))
        if pred.is_abstain:
            return
        rule = Practical(a)
        ks = prof.defined_k
        diffs = prof.cum_counts[:, 0] - prof.cum_counts[:, 1]
        for row, k in enumerate(ks):
            cond = abs(diffs[row] / k) > delta_threshold(rule, prof.n_total, int(k))
            if k < pred.chosen_k:
                assert not cond
            elif k == pred.chosen_k:
                assert cond

    @settings(max_examples=100, deadline=None)
    @given(label_seq, a_values)
    def test_binary_multiclass_bridge(self, seq, a):
        """Two-label scan at threshold a matches binary scan at 2a exactly."""
        prof = profile_from_sorted_labels(seq, ("+", "-"))
        multi = predict_multiclass(prof, Practical(a))
        binary = predict_binary(prof, Practical(2 * a))
        assert multi.labels == binary.labels
        assert multi.chosen_k == binary.chosen_k

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), a_values,
           st.integers(min_value=-8, max_value=8))
    def test_scale_invariance_of_predictions(self, seed, a, exponent):
        """Thresholds never see distances, so rescaling features changes nothing."""
        rng = np.random.default_rng(seed)
        train = tie_free_dataset(rng, 30)
        query = rng.normal(size=1)
        scale = 2.0 ** exponent
        scaled = LabeledDataset(train.features * scale, train.label_ids, train.alphabet)
        p = predict_binary(NeighborIndex(train).profile(query), Practical(a))
        ps = predict_binary(NeighborIndex(scaled).profile(query * scale), Practical(a))
        assert p.labels == ps.labels and p.chosen_k == ps.chosen_k

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_a0_is_1nn_on_tie_free_data(self, seed):
        """With no threshold the first neighborhood always fires."""
        rng = np.random.default_rng(seed)
        train = tie_free_dataset(rng, 30)
        query = rng.normal(size=1)
        prof = NeighborIndex(train).profile(query)
        pred = predict_binary(prof, Practical(0.0))
        assert pred.chosen_k == 1
        assert pred.labels[0] == knn_predict(prof, 1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), a_values, a_values)
    def test_coverage_monotone_on_random_data(self, seed, a1, a2):
        a_lo, a_hi = sorted((a1, a2))
        rng = np.random.default_rng(seed)
        train = tie_free_dataset(rng, 40)
        queries = tie_free_dataset(rng, 12)
        cov_lo = evaluate(train, queries, Practical(a_lo)).coverage
        cov_hi = evaluate(train, queries, Practical(a_hi)).coverage
        assert cov_hi <= cov_lo
