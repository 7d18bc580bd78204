"""Membership inference: shadow-model, confidence-threshold and embedding-autoencoder attacks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gnn
from . import tensor as T
from .classifiers import ClassifierConfig, fit_classifier
from .cluster import kmeans
from .embedding import EmbeddingMatrix
from .metrics import advantage, roc_auc

THRESHOLDS = np.arange(101) / 100.0


class AttackError(RuntimeError):
    pass


class InsufficientAnchorsError(AttackError):
    pass


@dataclass
class AttackResult:
    attack: str
    scores: np.ndarray
    decisions: np.ndarray
    membership: np.ndarray
    accuracy: float
    seed: int | None = None
    threshold: float | None = None
    threshold_curve: list | None = None
    params: dict = field(default_factory=dict)
    node_ids: np.ndarray | None = None

    @property
    def advantage(self):
        return advantage(self.accuracy)

    @property
    def auc(self):
        if self.membership.all() or not self.membership.any():
            return None
        return roc_auc(self.scores, self.membership)

    def to_dict(self):
        out = {
            "attack": self.attack,
            "accuracy": self.accuracy,
            "advantage": self.advantage,
            "accuracy_above_chance": self.accuracy - 0.5,
            "auc": self.auc,
            "n_eval": int(len(self.membership)),
            "seed": self.seed,
            "params": self.params,
        }
        if self.threshold is not None:
            out["threshold"] = self.threshold
        if self.threshold_curve is not None:
            out["threshold_curve"] = self.threshold_curve
        return out


def _result(attack, scores, decisions, membership, **kw):
    membership = np.asarray(membership).astype(bool)
    decisions = np.asarray(decisions).astype(bool)
    acc = float(np.mean(decisions == membership))
    return AttackResult(attack, np.asarray(scores, dtype=float), decisions, membership, acc, **kw)


def balanced_eval_set(members, non_members, seed, size=None):
    """Equal numbers of member and non-member ids, shuffled together.

    ``size`` caps the per-side count; by default the smaller side sets it.
    """
    rng = np.random.default_rng(seed)
    k = min(len(members), len(non_members))
    if size is not None:
        k = min(k, size)
    if k == 0:
        raise AttackError("need at least one member and one non-member to evaluate")
    m = rng.choice(np.asarray(members), size=k, replace=False)
    nm = rng.choice(np.asarray(non_members), size=k, replace=False)
    ids = np.concatenate([m, nm])
    bits = np.concatenate([np.ones(k, dtype=bool), np.zeros(k, dtype=bool)])
    order = rng.permutation(2 * k)
    return ids[order], bits[order]


def sorted_predictions(probs):
    """Prediction vectors sorted in descending order (class-permutation invariant)."""
    return -np.sort(-np.asarray(probs, dtype=np.float64), axis=1)


def _check_balanced(membership):
    membership = np.asarray(membership).astype(bool)
    if membership.size == 0:
        raise ValueError("empty evaluation set")
    if 2 * membership.sum() != membership.size:
        raise ValueError("membership evaluation set must be balanced (equal members and non-members)")
    return membership


# --- blackbox: confidence ---------------------------------------------------------

def confidence_attack(prediction_vectors, true_membership, threshold=None, seed=None):
    """Predict "member" when the top class probability reaches ``threshold``.

    Without a threshold every value in {0.00, 0.01, ..., 1.00} is tried; the
    curve is kept and the best point is reported.
    """
    probs = np.asarray(prediction_vectors, dtype=np.float64)
    if probs.size == 0:
        raise ValueError("no prediction vectors")
    membership = _check_balanced(true_membership)
    conf = probs.max(axis=1)
    if threshold is not None:
        return _result("confidence", conf, conf >= threshold, membership,
                       seed=seed, threshold=float(threshold), params={"threshold": float(threshold)})
    curve = [float(np.mean((conf >= tau) == membership)) for tau in THRESHOLDS]
    best = int(np.argmax(curve))
    tau = float(THRESHOLDS[best])
    res = _result("confidence", conf, conf >= tau, membership, seed=seed, threshold=tau,
                  threshold_curve=[[float(t), a] for t, a in zip(THRESHOLDS, curve)],
                  params={"threshold": "sweep"})
    return res


# --- blackbox: shadow model ----------------------------------------------------------

@dataclass
class ShadowConfig:
    classifier: str = "mlp"
    classifier_cfg: ClassifierConfig = field(default_factory=ClassifierConfig)
    shadow_train_size: int | None = None
    seed: int = 0


def shadow_attack(target_predict, aux, shadow_cfg, attack_cfg, eval_nodes, eval_membership):
    """Train a substitute model on ``aux`` and learn prediction -> membership from it.

    ``target_predict(node_ids)`` is the only access to the target. ``aux``
    must carry labels and be disjoint from the target's training data. The
    shadow model is deployed like the target: its members are queried on the
    graph induced by its training nodes, the remaining aux nodes on theirs.
    """
    membership = _check_balanced(eval_membership)
    if aux.labels is None:
        raise AttackError("auxiliary graph needs labels to train a shadow model")
    if aux.n < 4:
        raise AttackError(f"auxiliary graph with {aux.n} nodes is too small to split")
    rng = np.random.default_rng([attack_cfg.seed, 11])
    size = attack_cfg.shadow_train_size or aux.n // 2
    size = min(size, aux.n // 2)
    perm = rng.permutation(aux.n)
    shadow_in, shadow_out = np.sort(perm[:size]), np.sort(perm[size:])
    train_mask = np.zeros(aux.n, dtype=bool)
    train_mask[shadow_in] = True
    shadow = gnn.train(aux.with_masks(train=train_mask), shadow_cfg)
    oracle = gnn.InductiveOracle(shadow, aux, [shadow_in, shadow_out])

    k = min(len(shadow_in), len(shadow_out))
    if k == 0:
        raise AttackError("shadow split produced an empty side")
    ins = rng.choice(shadow_in, size=k, replace=False)
    outs = rng.choice(shadow_out, size=k, replace=False)
    X = sorted_predictions(oracle.predict(np.concatenate([ins, outs])))
    y = np.concatenate([np.ones(k, dtype=np.int64), np.zeros(k, dtype=np.int64)])
    if np.allclose(X, X[0]):
        raise AttackError("shadow predictions are identical for every node; synthetic dataset is degenerate")
    attack_model = fit_classifier(X, y, attack_cfg.classifier, 2, attack_cfg.classifier_cfg,
                                  seed=attack_cfg.seed)

    target_X = sorted_predictions(target_predict(np.asarray(eval_nodes)))
    if target_X.shape[1] != X.shape[1]:
        raise AttackError(f"target returns {target_X.shape[1]} classes, shadow {X.shape[1]}")
    scores = attack_model.predict_proba(target_X)[:, 1]
    params = {
        "classifier": attack_cfg.classifier,
        "shadow_train_size": int(size),
        "synthetic_size": int(2 * k),
        "shadow_train_acc": shadow.history["train_acc"][-1] if shadow.history["train_acc"] else None,
    }
    res = _result("shadow", scores, scores >= 0.5, membership, seed=attack_cfg.seed, params=params,
                  node_ids=np.asarray(eval_nodes))
    return res


# --- whitebox: embedding autoencoder + k-means -----------------------------------------

@dataclass
class WhiteboxConfig:
    hidden_dim: int = 16
    epochs: int = 200
    lr: float = 0.01
    standardize: bool = False  # per-column scaling would flatten the direction that separates members
    seed: int = 0


def _encode(weights, X):
    W1, b1, W2, b2 = weights[:4]
    return T.relu(X @ W1 + b1) @ W2 + b2


def _decode(weights, code):
    W3, b3, W4, b4 = weights[4:]
    return T.relu(code @ W3 + b3) @ W4 + b4


def fit_scalar_autoencoder(X, cfg):
    """Encoder R^d -> R and decoder R -> R^d minimizing squared reconstruction error.

    Returns ``(codes, weights, loss_history)``.
    """
    rng = np.random.default_rng([cfg.seed, 13])
    d, h = X.shape[1], cfg.hidden_dim

    def bias(k):
        return T.Tensor(np.zeros((1, k)), requires_grad=True)

    weights = [
        T.glorot_uniform(rng, d, h), bias(h), T.glorot_uniform(rng, h, 1), bias(1),
        T.glorot_uniform(rng, 1, h), bias(h), T.glorot_uniform(rng, h, d), bias(d),
    ]
    Xt = T.Tensor(X)
    opt = T.Adam(weights, lr=cfg.lr)
    history = []
    for _ in range(cfg.epochs):
        loss = T.mse(_decode(weights, _encode(weights, Xt)), X)
        T.backward(loss)
        opt.step()
        history.append(loss.item())
    codes = _encode(weights, Xt).data[:, 0]
    return codes, weights, history


def _name_clusters(codes, labels, centroids, anchor_rows, anchor_bits):
    """Index of the cluster that holds members, decided by anchor votes."""
    in_cluster = labels[anchor_rows]
    members = anchor_bits
    frac = np.array([np.mean(in_cluster[members] == c) - np.mean(in_cluster[~members] == c)
                     for c in (0, 1)])
    if frac[0] == frac[1] and len(np.unique(in_cluster)) == 1:
        raise InsufficientAnchorsError("all anchors fell into one cluster; supply more anchors")
    if frac[0] != frac[1]:
        return int(np.argmax(frac))
    # tied vote: side with the cluster whose centroid sits nearer the member anchors
    m_mean, n_mean = codes[anchor_rows[members]].mean(), codes[anchor_rows[~members]].mean()
    pull = [abs(centroids[c, 0] - m_mean) - abs(centroids[c, 0] - n_mean) for c in (0, 1)]
    if pull[0] == pull[1]:
        raise InsufficientAnchorsError("anchor vote is tied; supply more anchors")
    return int(np.argmin(pull))


def whitebox_attack(embeddings, anchor_rows, anchor_bits, cfg=None, true_membership=None):
    """Unsupervised membership inference from released embeddings.

    Rows are compressed to a scalar code by an autoencoder, the codes are split
    in two by k-means, and the anchors (a few rows of known membership) decide
    which cluster means "member". All rows that are not anchors are classified;
    metrics use only those rows. The outcome does not depend on row order.
    """
    cfg = cfg or WhiteboxConfig()
    X = embeddings.vectors if isinstance(embeddings, EmbeddingMatrix) else np.asarray(embeddings, float)
    n = len(X)
    anchor_rows = np.asarray(anchor_rows, dtype=np.int64)
    anchor_bits = np.asarray(anchor_bits).astype(bool)
    if len(anchor_rows) != len(anchor_bits):
        raise ValueError("one membership bit per anchor row")
    if anchor_bits.all() or not anchor_bits.any():
        raise InsufficientAnchorsError("anchors need at least one member and one non-member")

    # canonical row order makes training and seeding independent of the input order
    order = np.lexsort(X.T[::-1]) if X.shape[1] else np.arange(n)
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    Xc = X[order]
    if cfg.standardize:
        sd = Xc.std(axis=0)
        Xc = (Xc - Xc.mean(axis=0)) / np.where(sd > 1e-12, sd, 1.0)
    codes, _, history = fit_scalar_autoencoder(Xc, cfg)
    clusters = kmeans(codes, 2, seed=cfg.seed)
    member_cluster = _name_clusters(codes, clusters.labels, clusters.centroids,
                                    rank[anchor_rows], anchor_bits)
    sign = 1.0 if clusters.centroids[member_cluster, 0] >= clusters.centroids[1 - member_cluster, 0] else -1.0
    decisions_c = clusters.labels == member_cluster
    decisions = decisions_c[rank]
    scores = sign * codes[rank]

    keep = np.ones(n, dtype=bool)
    keep[anchor_rows] = False
    params = {"anchors": int(len(anchor_rows)), "ae_final_loss": history[-1] if history else None,
              "hidden_dim": cfg.hidden_dim, "epochs": cfg.epochs}
    truth = np.zeros(n, dtype=bool) if true_membership is None else np.asarray(true_membership).astype(bool)
    res = _result("whitebox", scores[keep], decisions[keep], truth[keep], seed=cfg.seed, params=params,
                  node_ids=np.flatnonzero(keep))
    if true_membership is None:
        res.accuracy = float("nan")
    return res


def pick_anchors(membership, per_side, seed):
    """Row indices of ``per_side`` known members and non-members."""
    membership = np.asarray(membership).astype(bool)
    rng = np.random.default_rng(seed)
    m = rng.choice(np.flatnonzero(membership), size=per_side, replace=False)
    nm = rng.choice(np.flatnonzero(~membership), size=per_side, replace=False)
    rows = np.concatenate([m, nm])
    bits = np.concatenate([np.ones(per_side, dtype=bool), np.zeros(per_side, dtype=bool)])
    return rows, bits
