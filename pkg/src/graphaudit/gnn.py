"""GCN and GraphSAGE node classifiers trained inductively on the tensor core."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .embedding import EmbeddingMatrix
from .graph import induced_subgraph, mean_aggregator, normalize_adjacency

DEFAULT_HIDDEN = {"gcn": 16, "sage": 64}


@dataclass
class GnnConfig:
    arch: str = "gcn"
    num_layers: int = 2
    hidden_dim: int | None = None
    embedding_layer: int = 1
    dropout: float = 0.0
    epochs: int = 200
    lr: float = 0.01
    optimizer: str = "adam"
    seed: int = 0
    num_classes: int | None = None

    def __post_init__(self):
        if self.arch not in DEFAULT_HIDDEN:
            raise ValueError(f"arch must be 'gcn' or 'sage', got {self.arch!r}")
        if self.num_layers < 2:
            raise ValueError("num_layers must be at least 2")
        if not 1 <= self.embedding_layer < self.num_layers:
            raise ValueError(f"embedding_layer must lie in [1, {self.num_layers - 1}]")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.hidden_dim is None:
            self.hidden_dim = DEFAULT_HIDDEN[self.arch]

    def widths(self, in_dim, num_classes):
        return [in_dim] + [self.hidden_dim] * (self.num_layers - 1) + [num_classes]


@dataclass
class NodeClassifier:
    config: GnnConfig
    weights: list
    history: dict = field(default_factory=lambda: {"train_acc": [], "test_acc": [], "loss": []})

    @property
    def num_classes(self):
        return self.weights[-1].shape[1]

    @property
    def in_dim(self):
        w = self.weights[0].shape[0]
        return w // 2 if self.config.arch == "sage" else w


def init_classifier(cfg, in_dim, num_classes):
    rng = np.random.default_rng([cfg.seed, 0])
    widths = cfg.widths(in_dim, num_classes)
    factor = 2 if cfg.arch == "sage" else 1
    weights = [T.glorot_uniform(rng, factor * widths[i], widths[i + 1]) for i in range(cfg.num_layers)]
    return NodeClassifier(cfg, weights)


def _check_features(model, X):
    if X.shape[1] != model.in_dim:
        raise T.ShapeError(f"features have {X.shape[1]} columns, model expects {model.in_dim}")


def gcn_forward(model, norm_adj, X, training=False, rng=None):
    """Activations ``[H0=X, H1, ..., HL=Z]`` of a GCN; returns (activations, logits)."""
    X = X if isinstance(X, T.Tensor) else T.Tensor(X)
    _check_features(model, X)
    if norm_adj.shape != (X.shape[0], X.shape[0]):
        raise T.ShapeError(f"adjacency {norm_adj.shape} does not match {X.shape[0]} feature rows")
    A = T.Tensor(norm_adj)
    h, acts = X, [X]
    last = len(model.weights) - 1
    for l, W in enumerate(model.weights):
        h = A @ (h @ W)
        if l < last:
            h = T.relu(h)
            if training:
                h = T.dropout(h, model.config.dropout, rng)
        acts.append(h)
    return acts, h


def sage_forward(model, g, X=None, training=False, rng=None, aggregator=None):
    """GraphSAGE with mean aggregation: ``h_v <- relu([h_v, mean_{u~v} h_u] W)``."""
    X = g.features if X is None else X
    X = X if isinstance(X, T.Tensor) else T.Tensor(X)
    _check_features(model, X)
    M = T.Tensor(mean_aggregator(g) if aggregator is None else aggregator)
    h, acts = X, [X]
    last = len(model.weights) - 1
    for l, W in enumerate(model.weights):
        h = T.concat_cols(h, M @ h) @ W
        if l < last:
            h = T.relu(h)
            if training:
                h = T.dropout(h, model.config.dropout, rng)
        acts.append(h)
    return acts, h


def forward(model, g, training=False, rng=None, structure=None):
    """Dispatch on architecture. ``structure`` may carry a precomputed operator."""
    if model.config.arch == "gcn":
        adj = normalize_adjacency(g, "sym") if structure is None else structure
        return gcn_forward(model, adj, g.features, training, rng)
    return sage_forward(model, g, None, training, rng, structure)


def structure_of(model, g):
    return normalize_adjacency(g, "sym") if model.config.arch == "gcn" else mean_aggregator(g)


def _accuracy(logits, labels):
    return float(np.mean(np.argmax(logits, axis=1) == labels)) if len(labels) else float("nan")


def train(g, cfg):
    """Fit a node classifier on the subgraph induced by the train nodes of ``g``.

    Only train nodes and the edges among them are used, so the fitted weights
    do not depend on any other part of ``g``. Test accuracy in the history is
    measured on the subgraph induced by the test nodes.
    """
    if g.labels is None:
        raise ValueError("training needs node labels")
    train_ids = np.flatnonzero(g.mask("train"))
    if len(train_ids) == 0:
        raise ValueError("graph has no labeled train nodes")
    num_classes = cfg.num_classes or g.num_classes
    model = init_classifier(cfg, g.features.shape[1], num_classes)
    g_train, _ = induced_subgraph(g, train_ids)
    s_train = structure_of(model, g_train)
    y_train = g_train.labels

    test_ids = np.flatnonzero(g.mask("test"))
    g_test = induced_subgraph(g, test_ids)[0] if len(test_ids) else None
    s_test = structure_of(model, g_test) if g_test is not None else None

    opt = T.make_optimizer(cfg.optimizer, model.weights, cfg.lr)
    drop_rng = np.random.default_rng([cfg.seed, 1])
    for _ in range(cfg.epochs):
        _, logits = forward(model, g_train, training=True, rng=drop_rng, structure=s_train)
        loss = T.cross_entropy(logits, y_train)
        T.backward(loss)
        opt.step()
        model.history["loss"].append(loss.item())
        _, z = forward(model, g_train, structure=s_train)
        model.history["train_acc"].append(_accuracy(z.data, y_train))
        if g_test is not None:
            _, zt = forward(model, g_test, structure=s_test)
            model.history["test_acc"].append(_accuracy(zt.data, g_test.labels))
    return model


def _check_ids(g, node_ids):
    node_ids = np.arange(g.n) if node_ids is None else np.asarray(node_ids, dtype=np.int64)
    if node_ids.size and (node_ids.min() < 0 or node_ids.max() >= g.n):
        raise KeyError(f"unknown node id for graph with {g.n} nodes")
    return node_ids


def predict(model, g, node_ids=None):
    """Class-probability rows for ``node_ids``, computed on graph ``g``."""
    node_ids = _check_ids(g, node_ids)
    _, z = forward(model, g)
    return T.softmax_np(z.data)[node_ids]


def extract_embeddings(model, g, layer_index=None, node_ids=None):
    layer_index = model.config.embedding_layer if layer_index is None else layer_index
    if not 1 <= layer_index < len(model.weights):
        raise IndexError(f"layer_index must lie in [1, {len(model.weights) - 1}]")
    node_ids = _check_ids(g, node_ids)
    acts, _ = forward(model, g)
    return EmbeddingMatrix(node_ids.copy(), acts[layer_index].data[node_ids].copy())


def accuracy(model, g, node_ids=None):
    node_ids = _check_ids(g, node_ids)
    return _accuracy(predict(model, g, node_ids), g.labels[node_ids])


class InductiveOracle:
    """Query interface for a deployed model on a partitioned graph.

    Each node is answered using the subgraph induced by the group it belongs
    to (e.g. members on the training graph, others on the held-out graph).
    """

    def __init__(self, model, g, groups):
        self.model = model
        self.group_of = np.full(g.n, -1, dtype=np.int64)
        self.local = np.full(g.n, -1, dtype=np.int64)
        self._outputs = []
        for k, ids in enumerate(groups):
            ids = np.asarray(ids, dtype=np.int64)
            if np.any(self.group_of[ids] >= 0):
                raise ValueError("oracle groups overlap")
            self.group_of[ids] = k
            self.local[ids] = np.arange(len(ids))
            sub, _ = induced_subgraph(g, ids)
            acts, z = forward(model, sub)
            self._outputs.append(([a.data for a in acts], T.softmax_np(z.data)))

    def _lookup(self, node_ids, pick):
        node_ids = np.asarray(node_ids, dtype=np.int64)
        if np.any(self.group_of[node_ids] < 0):
            raise KeyError("query for a node outside every oracle group")
        out = None
        for k in np.unique(self.group_of[node_ids]):
            sel = self.group_of[node_ids] == k
            block = pick(self._outputs[k])[self.local[node_ids[sel]]]
            if out is None:
                out = np.empty((len(node_ids), block.shape[1]))
            out[sel] = block
        return out

    def predict(self, node_ids):
        return self._lookup(node_ids, lambda o: o[1])

    def __call__(self, node_ids):
        return self.predict(node_ids)

    def embed(self, node_ids, layer_index=None):
        layer_index = self.model.config.embedding_layer if layer_index is None else layer_index
        if not 1 <= layer_index < len(self.model.weights):
            raise IndexError(f"layer_index must lie in [1, {len(self.model.weights) - 1}]")
        return self._lookup(node_ids, lambda o: o[0][layer_index])


# --- checkpoints ---------------------------------------------------------------

def save_checkpoint(model, path):
    """Text checkpoint: a JSON config line, then per layer ``rows cols`` and values."""
    with open(path, "w") as fh:
        fh.write("# graphaudit node-classifier checkpoint v1\n")
        fh.write(json.dumps(asdict(model.config), sort_keys=True) + "\n")
        fh.write(f"{len(model.weights)}\n")
        for W in model.weights:
            r, c = W.shape
            fh.write(f"{r} {c}\n")
            fh.write(" ".join(f"{x:.17g}" for x in W.data.ravel()) + "\n")


def load_checkpoint(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("# graphaudit node-classifier checkpoint"):
        raise ValueError(f"{path} is not a node-classifier checkpoint")
    cfg = GnnConfig(**json.loads(lines[1]))
    count = int(lines[2])
    weights, pos = [], 3
    for _ in range(count):
        r, c = (int(x) for x in lines[pos].split())
        values = np.array([float(x) for x in lines[pos + 1].split()])
        if values.size != r * c:
            raise ValueError(f"{path}: layer expects {r * c} values, found {values.size}")
        weights.append(T.Tensor(values.reshape(r, c), requires_grad=True))
        pos += 2
    return NodeClassifier(cfg, weights)
