"""DeepWalk and Node2Vec: biased random walks plus SkipGram with negative sampling."""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .embedding import EmbeddingMatrix

DENSE_LIMIT = 1500


@dataclass
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    dim: int = 128
    negatives: int = 5
    epochs: int = 1
    p: float = 1.0
    q: float = 1.0
    lr: float = 0.025
    batch_size: int = 8192
    seed: int = 0

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.walk_length < 2:
            raise ValueError("walk_length must be at least 2")
        if self.window < 1:
            raise ValueError("window must be at least 1")

    @classmethod
    def deepwalk(cls, **kw):
        kw.update(p=1.0, q=1.0)
        return cls(**kw)


class _Transitions:
    """Lazily cached cumulative second-order weights per (previous, current) pair."""

    def __init__(self, g, p, q):
        self.nbrs = [n.tolist() for n in g.neighbors()]
        self.nbr_sets = [set(n) for n in self.nbrs]
        self.inv_p, self.inv_q = 1.0 / p, 1.0 / q
        self.cache = {}

    def cumulative(self, prev, cur):
        key = (prev, cur)
        cum = self.cache.get(key)
        if cum is None:
            prev_nbrs = self.nbr_sets[prev]
            total, cum = 0.0, []
            for x in self.nbrs[cur]:
                if x == prev:
                    w = self.inv_p
                elif x in prev_nbrs:
                    w = 1.0
                else:
                    w = self.inv_q
                total += w
                cum.append(total)
            self.cache[key] = cum
        return cum


def walk_rng(seed, node, walk_index):
    return np.random.default_rng([seed, node, walk_index])


def sample_walks(g, cfg):
    """``walks_per_node`` walks from every non-isolated node.

    The first step is uniform over neighbors; later steps weight a candidate
    ``x`` by 1/p if it is the previous node, 1 if it neighbors the previous
    node and 1/q otherwise. Each walk draws from its own stream seeded by
    (seed, start node, walk index).
    """
    trans = _Transitions(g, cfg.p, cfg.q)
    nbrs = trans.nbrs
    walks = []
    for w in range(cfg.walks_per_node):
        for start in range(g.n):
            if not nbrs[start]:
                continue
            u = walk_rng(cfg.seed, start, w).random(cfg.walk_length - 1)
            first = nbrs[start]
            walk = [start, first[int(u[0] * len(first))]]
            for step in range(1, cfg.walk_length - 1):
                prev, cur = walk[-2], walk[-1]
                if not nbrs[cur]:
                    break
                cum = trans.cumulative(prev, cur)
                k = bisect.bisect_right(cum, u[step] * cum[-1])
                walk.append(nbrs[cur][min(k, len(cum) - 1)])
            walks.append(walk)
    return walks


def context_pairs(walks, window):
    """All (target, context) pairs with ``0 < |i - j| <= window`` within each walk."""
    targets, contexts = [], []
    for walk in walks:
        arr = np.asarray(walk, dtype=np.int64)
        for off in range(1, window + 1):
            if off >= len(arr):
                break
            targets.append(arr[:-off])
            contexts.append(arr[off:])
            targets.append(arr[off:])
            contexts.append(arr[:-off])
    if not targets:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(targets), np.concatenate(contexts)


def negative_distribution(walks, n):
    counts = np.bincount(np.concatenate([np.asarray(w) for w in walks]), minlength=n).astype(float)
    weights = counts ** 0.75
    return weights / weights.sum()


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sgns_loss(V, U, t, c, negs, dense=None):
    """Mean negative SGNS objective over a batch and its gradients w.r.t. ``V`` and ``U``.

    With ``dense`` (default when n <= DENSE_LIMIT) the per-pair coefficients are
    accumulated into an n x n matrix and the gradients become two matrix
    products; otherwise rows are gathered and scattered pair by pair.
    """
    n = V.shape[0]
    B, k = negs.shape
    dense = n <= DENSE_LIMIT if dense is None else dense
    if dense:
        S = V @ U.T
        sp = S[t, c]
        sn = S[t[:, None], negs]
    else:
        vt, uc, un = V[t], U[c], U[negs]
        sp = np.einsum("bd,bd->b", vt, uc)
        sn = np.einsum("bd,bkd->bk", vt, un)
    loss = -(_log_sigmoid(sp).sum() + _log_sigmoid(-sn).sum()) / B
    gp = (1.0 / (1.0 + np.exp(-sp)) - 1.0) / B       # d loss / d sp
    gn = (1.0 / (1.0 + np.exp(-sn))) / B             # d loss / d sn
    if dense:
        rows = np.concatenate([t, np.repeat(t, k)])
        cols = np.concatenate([c, negs.ravel()])
        coef = np.bincount(rows * n + cols, weights=np.concatenate([gp, gn.ravel()]), minlength=n * n)
        C = coef.reshape(n, n)
        return loss, C @ U, C.T @ V
    d_vt = gp[:, None] * uc + np.einsum("bk,bkd->bd", gn, un)
    rows_u = np.concatenate([c, negs.ravel()])
    d_u_rows = np.concatenate([gp[:, None] * vt, (gn[:, :, None] * vt[:, None, :]).reshape(B * k, -1)])
    scatter_v = sparse.csr_matrix((np.ones(B), (t, np.arange(B))), shape=(n, B))
    scatter_u = sparse.csr_matrix((np.ones(len(rows_u)), (rows_u, np.arange(len(rows_u)))),
                                  shape=(n, len(rows_u)))
    return loss, scatter_v @ d_vt, scatter_u @ d_u_rows


def train_skipgram(walks, n, cfg, return_history=False):
    """SkipGram with negative sampling over walk co-occurrences.

    Negatives are drawn from the unigram distribution raised to 0.75 and
    parameters are updated with minibatch Adam. Returns the target-side
    (input) vectors.
    """
    if not walks:
        raise ValueError("no walks to train on")
    rng = np.random.default_rng([cfg.seed, 7])
    t_all, c_all = context_pairs(walks, cfg.window)
    if t_all.size == 0:
        raise ValueError("walks are too short to form any (target, context) pair")
    neg_p = negative_distribution(walks, n)
    neg_cdf = np.cumsum(neg_p)
    V = (rng.random((n, cfg.dim)) - 0.5) / cfg.dim
    U = np.zeros((n, cfg.dim))
    params = [V, U]
    m = [np.zeros_like(V), np.zeros_like(U)]
    v = [np.zeros_like(V), np.zeros_like(U)]
    b1, b2, eps, step = 0.9, 0.999, 1e-8, 0
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(t_all.size)
        total, batches = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            t, c = t_all[idx], c_all[idx]
            negs = np.searchsorted(neg_cdf, rng.random((len(idx), cfg.negatives)) * neg_cdf[-1], side="right")
            negs = np.minimum(negs, n - 1)
            loss, gV, gU = sgns_loss(V, U, t, c, negs)
            total += loss
            batches += 1
            step += 1
            for i, g in enumerate((gV, gU)):
                m[i] = b1 * m[i] + (1 - b1) * g
                v[i] = b2 * v[i] + (1 - b2) * g * g
                params[i] -= cfg.lr * (m[i] / (1 - b1 ** step)) / (np.sqrt(v[i] / (1 - b2 ** step)) + eps)
        history.append(total / batches)
    emb = EmbeddingMatrix(np.arange(n), V.copy())
    return (emb, history) if return_history else emb


def embed(g, cfg, return_history=False):
    """Walks followed by SkipGram; isolated nodes keep their random initial vectors."""
    walks = sample_walks(g, cfg)
    return train_skipgram(walks, g.n, cfg, return_history=return_history)
