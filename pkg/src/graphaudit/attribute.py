"""Sensitive attribute inference from released node embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierConfig, fit_classifier
from .embedding import EmbeddingMatrix
from .metrics import chance_f1, f1_macro, majority_baseline_f1
from .tensor import ShapeError


@dataclass
class AttributeDataset:
    """Embedding rows with attribute ids and an aux/target row partition.

    Attribute ids must be contiguous (0..k-1). Target attributes are only used
    for scoring, never for training.
    """

    vectors: np.ndarray
    attributes: np.ndarray
    aux_rows: np.ndarray
    target_rows: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.attributes = np.asarray(self.attributes, dtype=np.int64)
        self.aux_rows = np.asarray(self.aux_rows, dtype=np.int64)
        self.target_rows = np.asarray(self.target_rows, dtype=np.int64)
        if len(self.vectors) != len(self.attributes):
            raise ValueError("one attribute id per embedding row")
        if np.intersect1d(self.aux_rows, self.target_rows).size:
            raise ValueError("aux and target rows overlap")
        present = np.unique(self.attributes)
        if present.size and (present[0] != 0 or present[-1] != present.size - 1):
            raise ValueError("attribute ids must form a contiguous range starting at 0")

    @classmethod
    def from_embeddings(cls, emb, attributes, aux_rows, target_rows):
        vectors = emb.vectors if isinstance(emb, EmbeddingMatrix) else emb
        return cls(vectors, attributes, aux_rows, target_rows)

    @property
    def num_categories(self):
        return int(self.attributes.max()) + 1

    @property
    def aux(self):
        return self.vectors[self.aux_rows], self.attributes[self.aux_rows]

    @property
    def target(self):
        return self.vectors[self.target_rows], self.attributes[self.target_rows]


@dataclass
class AttributeAttackModel:
    classifier: object

    @property
    def kind(self):
        return self.classifier.kind

    @property
    def num_classes(self):
        return self.classifier.n_classes

    @property
    def in_dim(self):
        return self.classifier.in_dim

    def predict_proba(self, X):
        return self.classifier.predict_proba(X)


def train_attribute_attack(ds, kind="mlp", cfg=None, seed=0):
    """Fit the attack classifier on the aux rows only."""
    X, y = ds.aux
    if len(np.unique(y)) < 2:
        raise ValueError("aux rows contain a single attribute category")
    model = fit_classifier(X, y, kind, ds.num_categories, cfg or ClassifierConfig(), seed=seed)
    return AttributeAttackModel(model)


def infer_attributes(model, target_embeddings, truth=None):
    """Most probable category per row, plus macro-F1 when ``truth`` is given."""
    X = target_embeddings.vectors if isinstance(target_embeddings, EmbeddingMatrix) else np.asarray(
        target_embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.in_dim:
        raise ShapeError(f"attack model expects {model.in_dim}-dim embeddings, got {X.shape}")
    pred = model.predict_proba(X).argmax(axis=1)
    if truth is None:
        return pred, None
    return pred, f1_macro(pred, truth, model.num_classes)


def evaluate_attribute_attack(ds, kind="mlp", cfg=None, seed=0, null_shuffles=0):
    """Train on aux, score on target; returns a flat metrics dict.

    With ``null_shuffles > 0`` the permutation-null F1 is added as well.
    """
    model = train_attribute_attack(ds, kind, cfg, seed)
    Xt, yt = ds.target
    pred, f1 = infer_attributes(model, Xt, yt)
    _, ya = ds.aux
    k = ds.num_categories
    majority = majority_baseline_f1(ya, yt, k)
    chance = chance_f1(ya, yt, k)
    out = {
        "attack": "attribute",
        "classifier": model.kind,
        "f1_macro": f1,
        "accuracy": float(np.mean(pred == yt)),
        "majority_baseline_f1": majority,
        "chance_f1": chance,
        "f1_over_majority": f1 - majority,
        "n_aux": int(len(ya)),
        "n_target": int(len(yt)),
        "num_categories": k,
    }
    if null_shuffles:
        out["null_f1"] = permutation_null_f1(ds, kind, cfg, seed, null_shuffles)
        out["f1_over_null"] = f1 - out["null_f1"]
    return out


def permutation_null_f1(ds, kind="mlp", cfg=None, seed=0, shuffles=10):
    """Mean target macro-F1 of the same attack trained on shuffled aux attributes.

    This is the leakage floor: what the attack scores when embeddings carry no
    information about the attribute but class frequencies are unchanged.
    """
    rng = np.random.default_rng([seed, 23])
    Xa, ya = ds.aux
    Xt, yt = ds.target
    scores = []
    for s in range(shuffles):
        y_perm = rng.permutation(ya)
        model = AttributeAttackModel(fit_classifier(Xa, y_perm, kind, ds.num_categories,
                                                    cfg or ClassifierConfig(), seed=seed + s))
        scores.append(infer_attributes(model, Xt, yt)[1])
    return float(np.mean(scores))
