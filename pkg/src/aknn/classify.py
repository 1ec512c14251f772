"""Adaptive neighborhood classification with abstention.

The stopping rule grows a ball around the query (walking the realizable
neighborhood sizes in increasing order) until the empirical label bias
clears a k-dependent significance threshold; if no neighborhood qualifies,
the classifier abstains. Three threshold schedules are supported, plus a
fixed-k majority baseline and an evaluation harness reporting coverage and
accuracy-on-predicted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .data import LabeledDataset
from .neighbors import NeighborIndex, NeighborProfile


@dataclass(frozen=True)
class Practical:
    """Threshold a / sqrt(k): one knob, no dependence on n."""

    a: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("a must be nonnegative")

    def thresholds(self, n: int, k: np.ndarray) -> np.ndarray:
        return self.a / np.sqrt(np.asarray(k, dtype=np.float64))


@dataclass(frozen=True)
class TheoryDefault:
    """Threshold c1 * sqrt((ln n + ln(1/delta)) / k)."""

    c1: float
    delta: float

    def __post_init__(self):
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    def thresholds(self, n: int, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.float64)
        if np.any(k > n):
            raise ValueError("k must not exceed n")
        return self.c1 * np.sqrt((math.log(n) + math.log(1.0 / self.delta)) / k)


@dataclass(frozen=True)
class TheoryVC:
    """Threshold c1 * sqrt((d0 * ln n + ln(1/delta)) / k), d0 the ball-family
    VC dimension of the ambient space."""

    c1: float
    delta: float
    d0: int

    def __post_init__(self):
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.d0 < 1:
            raise ValueError("d0 must be a positive integer")

    def thresholds(self, n: int, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.float64)
        if np.any(k > n):
            raise ValueError("k must not exceed n")
        return self.c1 * np.sqrt((self.d0 * math.log(n) + math.log(1.0 / self.delta)) / k)


ConfidenceRule = Union[Practical, TheoryDefault, TheoryVC]


def delta_threshold(rule: ConfidenceRule, n: int, k: int) -> float:
    """Significance threshold at one neighborhood size (natural log throughout)."""
    if k < 1:
        raise ValueError("k must be positive")
    return float(rule.thresholds(n, np.array([k]))[0])


@dataclass(frozen=True)
class Prediction:
    """Outcome of one query: a nonempty label set, or abstention.

    ``chosen_k`` is the realizable neighborhood size that triggered the
    decision; ``margin`` is the achieved bias statistic minus the threshold
    there. Both are absent on abstention.
    """

    labels: Optional[tuple]
    chosen_k: Optional[int] = None
    margin: Optional[float] = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) == 0:
            raise ValueError("label set must be nonempty (use labels=None to abstain)")
        if (self.labels is None) != (self.chosen_k is None):
            raise ValueError("chosen_k must be present exactly when labels are")

    @property
    def is_abstain(self) -> bool:
        return self.labels is None


ABSTAIN = Prediction(None)


def predict_binary(profile: NeighborProfile, rule: ConfidenceRule) -> Prediction:
    """Scan realizable k ascending; fire at the first |bias| strictly above
    the threshold and return the majority sign's label.

    The first alphabet entry plays +1. Comparisons use the integer-scaled
    form |c+ - c-| > k * threshold, which is exact for count data.
    """
    if profile.cum_counts.shape[1] != 2:
        raise ValueError("binary rule needs an alphabet of size exactly 2")
    k = profile.defined_k
    if k.size == 0:
        return ABSTAIN
    kf = k.astype(np.float64)
    diff = profile.cum_counts[:, 0] - profile.cum_counts[:, 1]  # c+ - c-
    thr = rule.thresholds(profile.n_total, kf)
    hits = np.abs(diff) > kf * thr
    if not hits.any():
        return ABSTAIN
    i = int(np.argmax(hits))
    label = profile.alphabet[0] if diff[i] > 0 else profile.alphabet[1]
    eta = diff[i] / kf[i]
    return Prediction((label,), int(k[i]), float(abs(eta) - thr[i]))


def predict_multiclass(profile: NeighborProfile, rule: ConfidenceRule) -> Prediction:
    """Scan realizable k ascending; fire at the first k where some label's
    share beats 1/|alphabet| by more than the threshold. All labels that
    qualify at that k are returned, so the outcome can be a set."""
    k = profile.defined_k
    if k.size == 0:
        return ABSTAIN
    n_labels = profile.cum_counts.shape[1]
    kf = k.astype(np.float64)
    thr = rule.thresholds(profile.n_total, kf)
    # integer-scaled comparison: K*c_y - k > K*(k*thr), exact on counts and,
    # for two labels, identical to the binary comparison at doubled threshold
    lhs = n_labels * profile.cum_counts - kf[:, None]
    rhs = n_labels * (kf * thr)
    hits = lhs > rhs[:, None]
    rows = hits.any(axis=1)
    if not rows.any():
        return ABSTAIN
    i = int(np.argmax(rows))
    winners = np.flatnonzero(hits[i])
    labels = tuple(profile.alphabet[j] for j in winners)
    best_stat = profile.cum_counts[i, winners].max() / kf[i] - 1.0 / n_labels
    return Prediction(labels, int(k[i]), float(best_stat - thr[i]))


def _resolution_scores(profile: NeighborProfile, score: str) -> np.ndarray:
    kf = profile.defined_k.astype(np.float64)
    shares = profile.cum_counts / kf[:, None]
    if score == "ratio":
        return shares / np.sqrt(kf)[:, None]
    if score == "significance":
        n_labels = profile.cum_counts.shape[1]
        return (shares - 1.0 / n_labels) * np.sqrt(kf)[:, None]
    raise ValueError(f"unknown resolution score {score!r}")


def resolve_single_label(profile: NeighborProfile, score: str = "ratio"):
    """Single-label fallback: argmax_y max_k share_y(k)/sqrt(k), ties broken
    by alphabet order. The ``significance`` score, (share - 1/|Y|)*sqrt(k),
    is an alternative weighting kept behind this flag."""
    label, _ = _resolve_with_k(profile, score)
    return label


def _resolve_with_k(profile: NeighborProfile, score: str = "ratio"):
    if profile.defined_k.size == 0:
        raise ValueError("empty profile")
    table = _resolution_scores(profile, score)
    per_label = table.max(axis=0)
    j = int(np.argmax(per_label))  # argmax takes the first max: alphabet order
    i = int(np.argmax(table[:, j]))
    return profile.alphabet[j], int(profile.defined_k[i])


def knn_predict(profile: NeighborProfile, k: int):
    """Majority label at the smallest realizable neighborhood size >= k;
    distance ties roll the vote forward to the next defined size. Majority
    ties break by alphabet order."""
    if k < 1:
        raise ValueError("k must be positive")
    hits = np.flatnonzero(profile.defined_k >= k)
    if hits.size == 0:
        raise ValueError(f"k={k} exceeds the profile (largest defined size "
                         f"{int(profile.defined_k[-1]) if profile.n_groups else 0})")
    row = hits[0]
    return profile.alphabet[int(np.argmax(profile.cum_counts[row]))]


def scan_trace(profile: NeighborProfile, rule: ConfidenceRule, mode: str = "binary") -> list:
    """Step-by-step view of the stopping-rule scan, for debugging a query.

    One record per realizable k: the per-label shares (or the signed bias in
    binary mode), the statistic compared against the threshold, and whether
    the rule fires there. The scan is reported in full even past the first
    firing row.
    """
    rows = []
    k = profile.defined_k
    if k.size == 0:
        return rows
    kf = k.astype(np.float64)
    thr = rule.thresholds(profile.n_total, kf)
    n_labels = profile.cum_counts.shape[1]
    for i in range(len(k)):
        shares = profile.cum_counts[i] / kf[i]
        if mode == "binary":
            stat = abs(float(shares[0] - shares[1]))
            fired = profile.cum_counts[i, 0] - profile.cum_counts[i, 1]
            fires = abs(fired) > kf[i] * thr[i]
            labels = (profile.alphabet[0],) if fired > 0 else (profile.alphabet[1],)
            winners = labels if fires else ()
        else:
            lhs = n_labels * profile.cum_counts[i] - kf[i]
            rhs = n_labels * (kf[i] * thr[i])
            hit = lhs > rhs
            stat = float(shares.max() - 1.0 / n_labels)
            fires = bool(hit.any())
            winners = tuple(profile.alphabet[j] for j in np.flatnonzero(hit))
        rows.append(
            {
                "k": int(k[i]),
                "radius": float(profile.radii[i]),
                "shares": [float(s) for s in shares],
                "statistic": stat,
                "threshold": float(thr[i]),
                "fires": bool(fires),
                "labels": list(winners),
            }
        )
    return rows


@dataclass
class QueryOutcome:
    """Per-query record inside an evaluation report."""

    labels: Optional[tuple]
    chosen_k: Optional[int]
    correct: Optional[bool]


@dataclass
class EvalReport:
    """Aggregated evaluation with abstention as a first-class outcome.

    ``n_predicted`` counts single-label outcomes only; multilabel outcomes
    are tallied separately (a multilabel counts as a hit when the true label
    is in the set). ``accuracy_on_predicted`` is absent when nothing was
    predicted.
    """

    n_queries: int
    n_predicted: int
    n_correct_among_predicted: int
    n_multilabel: int
    n_multilabel_hits: int
    per_query: list = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return self.n_predicted / self.n_queries

    @property
    def accuracy_on_predicted(self) -> Optional[float]:
        if self.n_predicted == 0:
            return None
        return self.n_correct_among_predicted / self.n_predicted

    @property
    def multilabel_rate(self) -> float:
        return self.n_multilabel / self.n_queries


def evaluate(
    train: LabeledDataset,
    queries: LabeledDataset,
    rule: ConfidenceRule,
    mode: str = "binary",
    exclude_self: bool = False,
    max_k: int | None = None,
    resolve: bool = False,
    metric: str = "euclidean",
) -> EvalReport:
    """Predict every query row and aggregate coverage and accuracy.

    With ``resolve`` set, abstentions and multilabel outcomes are replaced by
    the single-label fallback, so every query receives exactly one label and
    coverage is 1. Without it they count as non-predictions.
    """
    if train.alphabet != queries.alphabet:
        raise ValueError("alphabet mismatch between train and queries")
    if train.dim != queries.dim:
        raise ValueError("dimension mismatch between train and queries")
    if mode not in ("binary", "multiclass"):
        raise ValueError(f"unknown mode {mode!r}")
    predictor = predict_binary if mode == "binary" else predict_multiclass

    index = NeighborIndex(train, metric)
    report = EvalReport(queries.n, 0, 0, 0, 0)
    for q in range(queries.n):
        prof = index.profile(queries.features[q], exclude_self=exclude_self, max_k=max_k)
        pred = predictor(prof, rule)
        truth = queries.alphabet[queries.label_ids[q]]
        labels, chosen_k = pred.labels, pred.chosen_k
        if resolve and (labels is None or len(labels) > 1):
            label, at_k = _resolve_with_k(prof)
            labels, chosen_k = (label,), at_k
        if labels is None:
            report.per_query.append(QueryOutcome(None, None, None))
            continue
        correct = truth in labels
        if len(labels) == 1:
            report.n_predicted += 1
            report.n_correct_among_predicted += int(correct)
        else:
            report.n_multilabel += 1
            report.n_multilabel_hits += int(correct)
        report.per_query.append(QueryOutcome(labels, chosen_k, correct))
    return report
