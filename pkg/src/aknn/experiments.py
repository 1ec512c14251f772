"""Experiment runners: noise sweeps, capped-k sweeps, and convergence rates.

Each runner turns a seeded configuration into a deterministic list of row
dicts; re-running a configuration reproduces the rows byte for byte once
serialized. Synthetic sources carry an analytic oracle, so rows also report
agreement with the optimal classifier next to observed-label accuracy.
"""

from __future__ import annotations

import hashlib
import io
import json

import numpy as np

from .classify import (
    ConfidenceRule,
    Practical,
    _resolve_with_k,
    knn_predict,
    predict_binary,
    predict_multiclass,
)
from .data import LabeledDataset, NoiseSpec, inject_label_noise
from .neighbors import NeighborIndex
from .synthetic import PiecewiseDistribution


def derived_seed(*parts: int) -> int:
    """Stable sub-seed from integer coordinates (master seed, indices...)."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def config_hash(payload: dict) -> str:
    """Short provenance hash echoed into every emitted row."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def rows_to_csv(rows: list, columns: list) -> str:
    """Render rows deterministically: fixed column order, repr'd floats."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for col in columns:
            v = row.get(col, "")
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _first_alphabet_labels(ds: LabeledDataset) -> np.ndarray:
    return np.array(ds.labels, dtype=object)


def _prediction_label(pred, profile, resolve: bool):
    """Single label for head-to-head scoring; None when left unresolved."""
    if pred.labels is not None and len(pred.labels) == 1:
        return pred.labels[0]
    if resolve:
        label, _ = _resolve_with_k(profile)
        return label
    return None


# ---------------------------------------------------------------------------
# noise sweep
# ---------------------------------------------------------------------------

NOISE_SWEEP_COLUMNS = [
    "noise", "method", "param", "accuracy", "bayes_accuracy",
    "coverage", "n_queries", "config_hash",
]


def noise_sweep_rows(
    train: LabeledDataset,
    test: LabeledDataset,
    noise_levels,
    k_list,
    a_list,
    seed: int = 0,
    metric: str = "euclidean",
    resolve: bool = True,
    oracle: PiecewiseDistribution | None = None,
) -> list:
    """Fixed-k baselines against the adaptive rule across label-noise levels.

    Noise at each level is injected independently into the training and test
    labels, so reported accuracy is measured against corrupted test labels
    (the operational view); with an oracle, the ``bayes_accuracy`` column
    additionally scores agreement with the optimal classifier.
    """
    if not (noise_levels and k_list is not None and a_list is not None):
        raise ValueError("noise_levels must be nonempty")
    if len(list(k_list)) + len(list(a_list)) == 0:
        raise ValueError("need at least one k or one a value")
    bayes = None
    if oracle is not None:
        bayes = oracle.bayes_label(test.features[:, 0])
        bayes = np.array([int(b) for b in bayes], dtype=object)

    rows = []
    for p_idx, p in enumerate(noise_levels):
        spec_train = NoiseSpec(p, seed=derived_seed(seed, p_idx, 0))
        spec_test = NoiseSpec(p, seed=derived_seed(seed, p_idx, 1))
        train_p = inject_label_noise(train, spec_train) if p > 0 else train
        test_p = inject_label_noise(test, spec_test) if p > 0 else test
        truth = _first_alphabet_labels(test_p)

        index = NeighborIndex(train_p, metric)
        profiles = [index.profile(test_p.features[i]) for i in range(test_p.n)]

        for k in k_list:
            preds = np.array([knn_predict(prof, k) for prof in profiles], dtype=object)
            row = {
                "noise": float(p), "method": "knn", "param": float(k),
                "accuracy": float((preds == truth).mean()),
                "bayes_accuracy": float((preds == bayes).mean()) if bayes is not None else "",
                "coverage": 1.0, "n_queries": test_p.n,
            }
            rows.append(row)

        for a in a_list:
            rule = Practical(a)
            preds = []
            covered = 0
            for prof in profiles:
                pred = predict_binary(prof, rule)
                label = _prediction_label(pred, prof, resolve)
                covered += label is not None
                preds.append(label)
            preds = np.array(preds, dtype=object)
            scored = preds != None  # noqa: E711  (elementwise)
            acc = float((preds[scored] == truth[scored]).mean()) if scored.any() else ""
            bacc = ""
            if bayes is not None and scored.any():
                bacc = float((preds[scored] == bayes[scored]).mean())
            rows.append({
                "noise": float(p), "method": "aknn", "param": float(a),
                "accuracy": acc, "bayes_accuracy": bacc,
                "coverage": covered / test_p.n, "n_queries": test_p.n,
            })

    rows.sort(key=lambda r: (r["noise"], r["method"], r["param"]))
    return rows


# ---------------------------------------------------------------------------
# capped-k sweep
# ---------------------------------------------------------------------------

K_SWEEP_COLUMNS = [
    "method", "a", "max_k", "accuracy", "bayes_accuracy", "coverage",
    "multilabel_rate", "n_queries", "config_hash",
]


def k_sweep_rows(
    train: LabeledDataset,
    test: LabeledDataset,
    a_list,
    k_caps,
    seed: int = 0,
    metric: str = "euclidean",
    mode: str = "binary",
    oracle: PiecewiseDistribution | None = None,
) -> list:
    """Adaptive-rule accuracy and coverage as the neighborhood cap grows,
    with plain fixed-k rows at the same k values for comparison.

    Abstentions stay abstentions here: accuracy is on predicted queries only,
    multilabel outcomes count as correct when the truth is in the set and are
    also reported as a separate rate.
    """
    if not list(k_caps):
        raise ValueError("k_caps must be nonempty")
    predictor = predict_binary if mode == "binary" else predict_multiclass
    bayes = None
    if oracle is not None:
        bayes = np.array([int(b) for b in oracle.bayes_label(test.features[:, 0])], dtype=object)

    index = NeighborIndex(train, metric)
    profiles = [index.profile(test.features[i]) for i in range(test.n)]
    truth = _first_alphabet_labels(test)

    rows = []
    for k in k_caps:
        preds = np.array([knn_predict(prof, k) for prof in profiles], dtype=object)
        rows.append({
            "method": "knn", "a": "", "max_k": int(k),
            "accuracy": float((preds == truth).mean()),
            "bayes_accuracy": float((preds == bayes).mean()) if bayes is not None else "",
            "coverage": 1.0, "multilabel_rate": 0.0, "n_queries": test.n,
        })

    for a in a_list:
        rule = Practical(a)
        # scan once per query; a cap K keeps a decision iff its row falls
        # inside the truncated prefix
        fired_row = np.full(test.n, -1)
        fired_labels: list = [None] * test.n
        for i, prof in enumerate(profiles):
            pred = predictor(prof, rule)
            if pred.labels is not None:
                fired_row[i] = int(np.searchsorted(prof.defined_k, pred.chosen_k))
                fired_labels[i] = pred.labels
        for cap in k_caps:
            n_single = n_correct = n_multi = n_multi_hit = 0
            for i, prof in enumerate(profiles):
                if fired_row[i] < 0:
                    continue
                cap_row = min(int(np.searchsorted(prof.defined_k, cap)), prof.n_groups - 1)
                if fired_row[i] > cap_row:
                    continue
                labels = fired_labels[i]
                hit = truth[i] in labels
                if len(labels) == 1:
                    n_single += 1
                    n_correct += hit
                else:
                    n_multi += 1
                    n_multi_hit += hit
            predicted = n_single + n_multi
            acc = (n_correct + n_multi_hit) / predicted if predicted else ""
            bacc = ""
            if bayes is not None and predicted:
                b_hits = 0
                for i, prof in enumerate(profiles):
                    if fired_row[i] < 0:
                        continue
                    cap_row = min(int(np.searchsorted(prof.defined_k, cap)), prof.n_groups - 1)
                    if fired_row[i] <= cap_row and bayes[i] in fired_labels[i]:
                        b_hits += 1
                bacc = b_hits / predicted
            rows.append({
                "method": "aknn", "a": float(a), "max_k": int(cap),
                "accuracy": acc, "bayes_accuracy": bacc,
                "coverage": predicted / test.n,
                "multilabel_rate": n_multi / test.n, "n_queries": test.n,
            })

    rows.sort(key=lambda r: (r["method"], r["a"] if r["a"] != "" else -1.0, r["max_k"]))
    return rows


# ---------------------------------------------------------------------------
# convergence rates
# ---------------------------------------------------------------------------

POINTWISE_COLUMNS = [
    "x", "advantage", "n", "replicas", "error_rate", "config_hash",
]
RISK_COLUMNS = [
    "n", "replicas", "risk", "bayes_risk", "config_hash",
]


def pointwise_rate_rows(
    dist: PiecewiseDistribution,
    points,
    n_schedule,
    replicas: int,
    rule: ConfidenceRule,
    seed: int = 0,
) -> list:
    """Monte-Carlo frequency of disagreeing with the optimal label at fixed
    query points, along a growing-sample-size schedule. Abstentions count as
    disagreement: the claim under test is exact recovery of the optimal label."""
    if replicas < 1:
        raise ValueError("replicas must be positive")
    rows = []
    for xi, x in enumerate(points):
        eta_x = float(dist.eta_at(x))
        if eta_x == 0.0:
            raise ValueError(f"query point {x} has zero pointwise bias; no target label")
        target = 1 if eta_x > 0 else -1
        adv = dist.advantage(x).value
        for ni, n in enumerate(n_schedule):
            errors = 0
            for r in range(replicas):
                ds = dist.sample(n, seed=derived_seed(seed, xi, ni, r))
                pred = predict_binary(NeighborIndex(ds).profile([x]), rule)
                label = pred.labels[0] if (pred.labels and len(pred.labels) == 1) else None
                errors += label != target
            rows.append({
                "x": float(x), "advantage": float(adv), "n": int(n),
                "replicas": replicas, "error_rate": errors / replicas,
            })
    rows.sort(key=lambda r: (r["x"], r["n"]))
    return rows


def risk_rows(
    dist: PiecewiseDistribution,
    n_schedule,
    replicas: int,
    rule: ConfidenceRule,
    eval_size: int = 2000,
    seed: int = 0,
) -> list:
    """Monte-Carlo risk trajectory: fraction of fresh draws the classifier
    gets wrong, counting abstentions as errors, next to the optimal risk."""
    if replicas < 1:
        raise ValueError("replicas must be positive")
    r_star = dist.bayes_risk()
    rows = []
    for ni, n in enumerate(n_schedule):
        risks = []
        for r in range(replicas):
            train = dist.sample(n, seed=derived_seed(seed, 7, ni, r, 0))
            test = dist.sample(eval_size, seed=derived_seed(seed, 7, ni, r, 1))
            index = NeighborIndex(train)
            wrong = 0
            for i in range(test.n):
                pred = predict_binary(index.profile(test.features[i]), rule)
                label = pred.labels[0] if (pred.labels and len(pred.labels) == 1) else None
                wrong += label != test.alphabet[test.label_ids[i]]
            risks.append(wrong / test.n)
        rows.append({
            "n": int(n), "replicas": replicas,
            "risk": float(np.mean(risks)), "bayes_risk": float(r_star),
        })
    rows.sort(key=lambda r: r["n"])
    return rows
