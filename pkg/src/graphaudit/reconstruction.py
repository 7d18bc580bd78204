"""Graph reconstruction from released node embeddings, and link inference on the result."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .embedding import EmbeddingMatrix
from .graph import normalize_adjacency
from .metrics import advantage, average_precision, roc_auc

DECODERS = ("inner_product", "bilinear")
LOSSES = ("weighted_bce", "squared")


@dataclass
class AutoencoderConfig:
    hidden_dim: int = 32
    emb_dim: int = 16
    decoder: str = "inner_product"
    loss: str = "weighted_bce"
    epochs: int = 200
    lr: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")


@dataclass
class GraphAutoencoder:
    """GCN encoder (features -> hidden -> emb) with an inner-product or bilinear decoder.

    ``encoder`` is None when the decoder was fitted directly on released
    embeddings of the auxiliary nodes.
    """

    config: AutoencoderConfig
    encoder: list | None
    bilinear: T.Tensor | None
    history: dict = field(default_factory=lambda: {"loss": [], "train_auc": [], "train_ap": [],
                                                   "val_auc": [], "val_ap": []})

    @property
    def decoder(self):
        return self.config.decoder

    @property
    def num_decoder_params(self):
        return 0 if self.bilinear is None else self.bilinear.data.size

    def encode(self, g):
        if self.encoder is None:
            raise ValueError("this autoencoder has no encoder (decoder fitted on released embeddings)")
        W1, W2 = self.encoder
        A = T.Tensor(normalize_adjacency(g, "sym"))
        Z = A @ (T.relu(A @ (T.Tensor(g.features) @ W1)) @ W2)
        return EmbeddingMatrix(np.arange(g.n), Z.data.copy())


def _logits(Z, bilinear):
    if bilinear is None:
        return Z @ T.transpose(Z)
    return Z @ (bilinear @ T.transpose(Z))


def _symmetric_scores(logits):
    sym = 0.5 * (logits + logits.T)
    S = T._sigmoid(sym)
    np.fill_diagonal(S, 0.0)
    return S


def _eval_pairs(g, seed):
    """All edges plus an equal number of uniformly drawn non-edges (i < j)."""
    rng = np.random.default_rng(seed)
    pos = g.edges
    n = g.n
    total_pairs = n * (n - 1) // 2
    n_neg = min(len(pos), total_pairs - len(pos))
    existing = set(map(tuple, pos.tolist()))
    neg = set()
    if n_neg > total_pairs // 4:
        iu, ju = np.triu_indices(n, k=1)
        cand = [(i, j) for i, j in zip(iu.tolist(), ju.tolist()) if (i, j) not in existing]
        pick = rng.choice(len(cand), size=n_neg, replace=False)
        neg = [cand[k] for k in sorted(pick)]
    else:
        while len(neg) < n_neg:
            i, j = rng.integers(n, size=2)
            if i == j:
                continue
            pair = (min(i, j), max(i, j))
            if pair not in existing:
                neg.add(pair)
        neg = sorted(neg)
    neg = np.array(neg, dtype=np.int64).reshape(-1, 2)
    pairs = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(len(pos), dtype=bool), np.zeros(len(neg), dtype=bool)])
    return pairs, labels


def _pair_metrics(S, pairs, labels):
    s = S[pairs[:, 0], pairs[:, 1]]
    return roc_auc(s, labels), average_precision(s, labels)


def train_autoencoder(aux, cfg=None, aux_embeddings=None, val=None):
    """Fit the attack autoencoder on the adversary's auxiliary graph.

    By default a GCN encoder over ``aux`` features is trained together with the
    decoder. When ``aux_embeddings`` (the released vectors of the aux nodes)
    are given, only the decoder is fitted, directly on those vectors.
    ``val`` is an optional graph whose reconstruction AUC/AP is tracked per
    epoch (encoder mode only).
    """
    cfg = cfg or AutoencoderConfig()
    if aux.num_edges == 0:
        raise ValueError("auxiliary graph has no edges to learn from")
    rng = np.random.default_rng([cfg.seed, 17])
    A = aux.adjacency()
    n = aux.n
    offdiag = 1.0 - np.eye(n)
    n_pos = 2.0 * aux.num_edges
    pos_weight = (offdiag.sum() - n_pos) / n_pos

    if aux_embeddings is None:
        encoder = [T.glorot_uniform(rng, aux.features.shape[1], cfg.hidden_dim),
                   T.glorot_uniform(rng, cfg.hidden_dim, cfg.emb_dim)]
        A_norm = T.Tensor(normalize_adjacency(aux, "sym"))
        X = T.Tensor(aux.features)
        d = cfg.emb_dim
    else:
        encoder = None
        Zfixed = aux_embeddings.vectors if isinstance(aux_embeddings, EmbeddingMatrix) else np.asarray(aux_embeddings)
        if len(Zfixed) != n:
            raise ValueError(f"{len(Zfixed)} aux embeddings for {n} aux nodes")
        Zfixed = T.Tensor(Zfixed)
        d = Zfixed.shape[1]
    bilinear = None
    if cfg.decoder == "bilinear":
        init = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d))
        bilinear = T.Tensor(0.5 * (init + init.T) + np.eye(d), requires_grad=True)
    ae = GraphAutoencoder(cfg, encoder, bilinear)
    params = (encoder or []) + ([bilinear] if bilinear is not None else [])

    train_pairs, train_labels = _eval_pairs(aux, [cfg.seed, 1])
    val_pairs = _eval_pairs(val, [cfg.seed, 2]) if val is not None and val.num_edges and encoder else None

    def embed_aux():
        if encoder is None:
            return Zfixed
        W1, W2 = encoder
        return A_norm @ (T.relu(A_norm @ (X @ W1)) @ W2)

    def record(Z):
        S = _symmetric_scores(_logits(T.Tensor(Z.data), ae.bilinear).data)
        auc, ap = _pair_metrics(S, train_pairs, train_labels)
        ae.history["train_auc"].append(auc)
        ae.history["train_ap"].append(ap)
        if val_pairs is not None:
            Sv = decode_adjacency(ae, ae.encode(val))
            auc, ap = _pair_metrics(Sv, *val_pairs)
            ae.history["val_auc"].append(auc)
            ae.history["val_ap"].append(ap)

    record(embed_aux())
    opt = T.Adam(params, lr=cfg.lr) if params else None
    for _ in range(cfg.epochs if params else 0):
        Z = embed_aux()
        logits = _logits(Z, bilinear)
        if cfg.loss == "weighted_bce":
            loss = T.bce_with_logits(logits, A, pos_weight=pos_weight, mask=offdiag)
        else:
            loss = T.mean(T.square(T.mul(T.sub(T.sigmoid(logits), A), offdiag)))
        T.backward(loss)
        opt.step()
        if bilinear is not None:
            bilinear.data = 0.5 * (bilinear.data + bilinear.data.T)
        ae.history["loss"].append(loss.item())
        record(embed_aux())
    return ae


def decode_adjacency(ae, Z):
    """Edge scores ``sigmoid(Z Z^T)`` or ``sigmoid(Z W Z^T)``; symmetric, zero diagonal."""
    Z = Z.vectors if isinstance(Z, EmbeddingMatrix) else np.asarray(Z, dtype=np.float64)
    if ae.bilinear is not None and Z.shape[1] != ae.bilinear.shape[0]:
        raise T.ShapeError(f"bilinear decoder expects {ae.bilinear.shape[0]}-dim embeddings, got {Z.shape[1]}")
    logits = Z @ Z.T if ae.bilinear is None else Z @ ae.bilinear.data @ Z.T
    return _symmetric_scores(logits)


@dataclass
class ReconstructionResult:
    scores: np.ndarray
    threshold: float
    adjacency: np.ndarray
    policy: str
    decoder: str
    metrics: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.scores)

    def predicted_edges(self):
        iu, ju = np.nonzero(np.triu(self.adjacency, k=1))
        return np.stack([iu, ju], axis=1)

    def to_dict(self):
        out = {"attack": "reconstruction", "decoder": self.decoder, "threshold": self.threshold,
               "threshold_policy": self.policy, "n_nodes": int(self.n),
               "n_edges_predicted": int(len(self.predicted_edges()))}
        out.update(self.metrics)
        return out


def density_threshold(S, density):
    """Score cut that marks ``round(density * n(n-1)/2)`` pairs as edges."""
    iu = np.triu_indices(len(S), k=1)
    vals = np.sort(S[iu])[::-1]
    k = int(round(density * len(vals)))
    if k <= 0:
        return float(np.nextafter(vals[0], np.inf)) if len(vals) else 1.0
    return float(vals[min(k, len(vals)) - 1])


def reconstruct_target(ae, target_embeddings, policy="fixed", threshold=0.5, density=None,
                       truth=None, seed=0):
    """Decode released target embeddings into a scored and a binary adjacency.

    ``policy`` is ``"fixed"`` (use ``threshold``) or ``"density"`` (cut so the
    predicted edge density equals ``density``). With a ground-truth graph the
    result carries ROC-AUC, average precision and link-inference accuracy on
    all true edges plus as many sampled non-edges.
    """
    S = decode_adjacency(ae, target_embeddings)
    if policy == "fixed":
        tau = float(threshold)
    elif policy == "density":
        if density is None:
            raise ValueError("density policy needs an assumed edge density")
        tau = density_threshold(S, density)
    else:
        raise ValueError(f"unknown threshold policy {policy!r}")
    A_rec = (S >= tau).astype(np.int8)
    np.fill_diagonal(A_rec, 0)
    result = ReconstructionResult(S, tau, A_rec, policy, ae.decoder)
    if truth is not None:
        if truth.n != len(S):
            raise ValueError(f"ground truth has {truth.n} nodes, embeddings {len(S)}")
        if truth.num_edges:
            pairs, labels = _eval_pairs(truth, seed)
            auc, ap = _pair_metrics(S, pairs, labels)
            link_acc = link_inference_accuracy(result, pairs, labels)
            result.metrics.update({"auc": auc, "average_precision": ap,
                                   "link_accuracy": link_acc, "link_advantage": advantage(link_acc),
                                   "link_accuracy_all_pairs": all_pairs_accuracy(result, truth),
                                   "n_edges_true": int(truth.num_edges), "n_eval_pairs": int(len(pairs))})
    return result


def infer_link(result, i, j):
    n = result.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node ids must lie in 0..{n - 1}")
    if i == j:
        raise ValueError("link inference needs two distinct nodes")
    return int(result.adjacency[i, j])


def link_inference_accuracy(result, pairs, labels):
    pairs = np.asarray(pairs, dtype=np.int64)
    bits = result.adjacency[pairs[:, 0], pairs[:, 1]].astype(bool)
    return float(np.mean(bits == np.asarray(labels).astype(bool)))


def all_pairs_accuracy(result, truth):
    """Agreement of A_rec with the true adjacency over every unordered pair i < j."""
    iu = np.triu_indices(result.n, k=1)
    return float(np.mean(result.adjacency[iu] == truth.adjacency()[iu]))


def save_edge_list(result, path):
    with open(path, "w") as fh:
        for i, j in result.predicted_edges():
            fh.write(f"{i} {j}\n")


def save_scores(result, path, max_nodes=2000):
    if result.n > max_nodes:
        raise ValueError(f"score matrix dump is limited to {max_nodes} nodes")
    np.savetxt(path, result.scores, delimiter=",", fmt="%.17g")
