"""Attack evaluation metrics shared by every attack module."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata


def advantage(accuracy):
    """Adversary advantage over a 50% random guess: ``2 * (accuracy - 0.5)``."""
    return 2.0 * (accuracy - 0.5)


def accuracy(predictions, labels):
    predictions, labels = np.asarray(predictions), np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ValueError("predictions and labels must be non-empty and aligned")
    return float(np.mean(predictions == labels))


def _binary_inputs(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores but {labels.size} labels")
    return scores, labels


def roc_auc(scores, labels):
    """Mann-Whitney AUC from average ranks; tied pairs count one half."""
    scores, labels = _binary_inputs(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both positive and negative labels")
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels):
    """Mean of precision@k over the ranks k of the positives.

    Scores are sorted descending with ties kept in input order.
    """
    scores, labels = _binary_inputs(scores, labels)
    if not labels.any():
        raise ValueError("average_precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hit = np.arange(1, len(ranks) + 1) / ranks
    return float(precision_at_hit.mean())


def f1_macro(predictions, labels, k_classes):
    """Unweighted mean of per-class F1; a class with no support or predictions scores 0."""
    if k_classes < 2:
        raise ValueError("f1_macro needs at least two classes")
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    scores = []
    for c in range(k_classes):
        tp = np.sum((predictions == c) & (labels == c))
        fp = np.sum((predictions == c) & (labels != c))
        fn = np.sum((predictions != c) & (labels == c))
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2.0 * tp / denom)
    return float(np.mean(scores))


def majority_baseline_f1(train_labels, eval_labels, k_classes):
    """Macro-F1 of always predicting the most frequent training category."""
    majority = np.bincount(np.asarray(train_labels, dtype=np.int64), minlength=k_classes).argmax()
    return f1_macro(np.full(len(eval_labels), majority), eval_labels, k_classes)


def chance_f1(train_labels, eval_labels, k_classes):
    """Expected macro-F1 of guessing categories at their training frequencies.

    For class c with guess rate q_c and true rate p_c the expected F1 is
    ``2 p_c q_c / (p_c + q_c)``.
    """
    q = np.bincount(np.asarray(train_labels, dtype=np.int64), minlength=k_classes) / len(train_labels)
    p = np.bincount(np.asarray(eval_labels, dtype=np.int64), minlength=k_classes) / len(eval_labels)
    denom = p + q
    per = np.where(denom > 0, 2 * p * q / np.where(denom > 0, denom, 1.0), 0.0)
    return float(per.mean())


@dataclass
class MetricBundle:
    accuracy: float | None = None
    auc: float | None = None
    average_precision: float | None = None
    f1_macro: float | None = None
    support: dict | None = None

    @property
    def advantage(self):
        return None if self.accuracy is None else advantage(self.accuracy)

    @property
    def accuracy_above_chance(self):
        return None if self.accuracy is None else self.accuracy - 0.5

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if v is not None}
        if self.accuracy is not None:
            d["advantage"] = self.advantage
            d["accuracy_above_chance"] = self.accuracy_above_chance
        return d
