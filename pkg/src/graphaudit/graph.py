"""Graph data model, text ingestion, subgraph sampling and SBM generation."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted graph with dense node features.

    ``edges`` is an (m, 2) int array of pairs ``i < j``, sorted and unique.
    ``labels`` and ``attributes`` are optional integer arrays of length n.
    Masks are boolean arrays of length n; absent masks mean "all False".
    """

    features: np.ndarray
    edges: np.ndarray
    labels: np.ndarray | None = None
    attributes: np.ndarray | None = None
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None
    _adj_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise GraphFormatError("features must be an n x D matrix")
        e = self.edges
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphFormatError(f"edge endpoint out of range for n={n}")
        if e.size and np.any(e[:, 0] >= e[:, 1]):
            raise GraphFormatError("edges must be stored as pairs i < j (no self-loops)")
        for name in ("labels", "attributes", "train_mask", "val_mask", "test_mask"):
            v = getattr(self, name)
            if v is not None and len(v) != n:
                raise GraphFormatError(f"{name} has length {len(v)}, expected {n}")
        masks = [m for m in (self.train_mask, self.val_mask, self.test_mask) if m is not None]
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                if np.any(masks[i] & masks[j]):
                    raise GraphFormatError("train/val/test masks overlap")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_classes(self):
        return 0 if self.labels is None else int(self.labels.max()) + 1

    def adjacency(self):
        """Dense symmetric 0/1 adjacency matrix (cached)."""
        if "A" not in self._adj_cache:
            a = np.zeros((self.n, self.n))
            if self.num_edges:
                a[self.edges[:, 0], self.edges[:, 1]] = 1.0
                a[self.edges[:, 1], self.edges[:, 0]] = 1.0
            self._adj_cache["A"] = a
        return self._adj_cache["A"]

    def neighbors(self):
        """List of sorted neighbor arrays, one per node."""
        if "nbrs" not in self._adj_cache:
            lists = [[] for _ in range(self.n)]
            for i, j in self.edges:
                lists[i].append(j)
                lists[j].append(i)
            self._adj_cache["nbrs"] = [np.array(sorted(x), dtype=np.int64) for x in lists]
        return self._adj_cache["nbrs"]

    def degrees(self):
        return self.adjacency().sum(axis=1)

    def mask(self, name):
        m = getattr(self, f"{name}_mask")
        return np.zeros(self.n, dtype=bool) if m is None else m

    def with_masks(self, train=None, val=None, test=None):
        return replace(self, train_mask=train, val_mask=val, test_mask=test, _adj_cache={})


def canonical_edges(pairs, n=None):
    """Deduplicate an iterable of (u, v) pairs into sorted unique i<j rows."""
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if n is not None and (arr.min() < 0 or arr.max() >= n):
        bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
        raise GraphFormatError(f"edge {tuple(bad)} has an endpoint outside 0..{n - 1}")
    arr = np.sort(arr, axis=1)
    arr = arr[arr[:, 0] != arr[:, 1]]
    return np.unique(arr, axis=0)


# --- files ------------------------------------------------------------------

def _read_node_values(path, n, what):
    values = np.full(n, -1, dtype=np.int64)
    seen = set()
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                continue  # header
            if len(row) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'node,value'")
            node, value = int(row[0]), int(row[1])
            if node in seen:
                raise GraphFormatError(f"{path}:{lineno}: duplicate node {node} in {what} file")
            if not 0 <= node < n:
                raise GraphFormatError(f"{path}:{lineno}: node {node} outside 0..{n - 1}")
            seen.add(node)
            values[node] = value
    if len(seen) != n:
        raise GraphFormatError(f"{path}: {what} given for {len(seen)} of {n} nodes")
    return values


def load_graph(edges_path, features_path, labels_path=None, attributes_path=None, masks_path=None):
    """Read a graph from the text formats documented in ``docs/formats.md``."""
    rows = []
    with open(features_path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            rows.append(row)
    if not rows:
        raise GraphFormatError(f"{features_path}: no feature rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise GraphFormatError(f"{features_path}: row {i + 1} has {len(r)} values, expected {width}")
    features = np.array(rows, dtype=np.float64)
    n = len(features)

    pairs = []
    with open(edges_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 2:
                raise GraphFormatError(f"{edges_path}:{lineno}: expected 'src dst'")
            u, v = int(parts[0]), int(parts[1])
            if u >= n or v >= n or u < 0 or v < 0:
                raise GraphFormatError(f"{edges_path}:{lineno}: endpoint >= n={n}")
            pairs.append((u, v))
    edges = canonical_edges(pairs, n)

    labels = _read_node_values(labels_path, n, "label") if labels_path else None
    attributes = _read_node_values(attributes_path, n, "attribute") if attributes_path else None
    masks = {}
    if masks_path:
        masks = _read_masks(masks_path, n)
    return Graph(features, edges, labels, attributes, **masks)


_SPLITS = ("train", "val", "test")


def _read_masks(path, n):
    masks = {f"{s}_mask": np.zeros(n, dtype=bool) for s in _SPLITS}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0] == "node"):
                continue
            node, split = int(row[0]), row[1].strip()
            if split not in _SPLITS:
                raise GraphFormatError(f"{path}:{lineno}: unknown split {split!r}")
            masks[f"{split}_mask"][node] = True
    return masks


def save_graph(g, directory):
    """Write ``g`` into ``directory``; returns a dict of the written paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "edges": os.path.join(directory, "edges.txt"),
        "features": os.path.join(directory, "features.csv"),
    }
    with open(paths["edges"], "w") as fh:
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")
    np.savetxt(paths["features"], g.features, delimiter=",", fmt="%.17g")
    for name in ("labels", "attributes"):
        values = getattr(g, name)
        if values is None:
            continue
        path = os.path.join(directory, f"{name}.csv")
        with open(path, "w") as fh:
            fh.write("node,value\n")
            for node, v in enumerate(values):
                fh.write(f"{node},{int(v)}\n")
        paths[name] = path
    if any(getattr(g, f"{s}_mask") is not None for s in _SPLITS):
        path = os.path.join(directory, "masks.csv")
        with open(path, "w") as fh:
            fh.write("node,split\n")
            for s in _SPLITS:
                for node in np.flatnonzero(g.mask(s)):
                    fh.write(f"{node},{s}\n")
        paths["masks"] = path
    return paths


def load_graph_dir(directory):
    def opt(name):
        p = os.path.join(directory, name)
        return p if os.path.exists(p) else None

    return load_graph(
        os.path.join(directory, "edges.txt"),
        os.path.join(directory, "features.csv"),
        opt("labels.csv"),
        opt("attributes.csv"),
        opt("masks.csv"),
    )


# --- structure ----------------------------------------------------------------

def normalize_adjacency(g, mode="sym"):
    """Add self-loops and normalize: ``D^-1/2 (A+I) D^-1/2`` or ``D^-1 (A+I)``."""
    a_hat = g.adjacency() + np.eye(g.n)
    deg = a_hat.sum(axis=1)
    if mode == "sym":
        return a_hat / np.sqrt(np.outer(deg, deg))
    if mode == "rw":
        return a_hat / deg[:, None]
    raise ValueError(f"unknown normalization mode {mode!r}")


def mean_aggregator(g):
    """Row-normalized adjacency without self-loops; isolated rows are zero."""
    a = g.adjacency()
    deg = a.sum(axis=1)
    out = np.zeros_like(a)
    nz = deg > 0
    out[nz] = a[nz] / deg[nz, None]
    return out


def induced_subgraph(g, nodes):
    """Node-induced subgraph on ``nodes`` (kept in the given order).

    Returns ``(subgraph, nodes)`` where ``nodes[k]`` is the original id of new node ``k``.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    e = g.edges
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0) if len(e) else np.zeros(0, dtype=bool)
    sub_edges = canonical_edges(remap[e[keep]]) if len(e) else np.zeros((0, 2), dtype=np.int64)

    def pick(v):
        return None if v is None else v[nodes].copy()

    sub = Graph(
        g.features[nodes].copy(),
        sub_edges,
        pick(g.labels),
        pick(g.attributes),
        pick(g.train_mask),
        pick(g.val_mask),
        pick(g.test_mask),
    )
    return sub, nodes


def split_disjoint(g, fraction, seed):
    """Random partition of the nodes into two induced subgraphs.

    The first side receives ``round(fraction * n)`` nodes. Returns
    ``(first, second, first_ids, second_ids)`` with id tables mapping new
    node index to original id.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    k = int(round(fraction * g.n))
    if k == 0 or k == g.n:
        raise ValueError(f"fraction {fraction} leaves one side empty for n={g.n}")
    perm = np.random.default_rng(seed).permutation(g.n)
    first_ids, second_ids = np.sort(perm[:k]), np.sort(perm[k:])
    first, _ = induced_subgraph(g, first_ids)
    second, _ = induced_subgraph(g, second_ids)
    return first, second, first_ids, second_ids


def nested_split(n, aux_fraction, target_fraction, seed):
    """Partition ``range(n)`` into (aux, target, rest) node id arrays.

    A single seeded permutation is cut with the target taken from the end, so
    for a fixed seed the target set does not depend on ``aux_fraction`` and a
    smaller aux set is contained in a larger one.
    """
    if not 0.0 < aux_fraction < 1.0 or not 0.0 < target_fraction < 1.0:
        raise ValueError("fractions must lie in (0, 1)")
    if aux_fraction + target_fraction > 1.0 + 1e-12:
        raise ValueError(f"aux {aux_fraction} + target {target_fraction} exceeds 1")
    perm = np.random.default_rng(seed).permutation(n)
    n_aux = int(round(aux_fraction * n))
    n_target = int(round(target_fraction * n))
    n_aux = min(n_aux, n - n_target)
    if n_aux == 0 or n_target == 0:
        raise ValueError("split leaves the aux or target side empty")
    aux = np.sort(perm[:n_aux])
    target = np.sort(perm[n - n_target:])
    rest = np.sort(perm[n_aux:n - n_target])
    return aux, target, rest


def make_inductive_masks(g, n_train, n_val, n_test, seed, stratified=False):
    """Sample disjoint train/val/test masks uniformly at random.

    Nodes outside all three masks stay unassigned (available to an adversary
    as auxiliary data). With ``stratified`` the train nodes are spread evenly
    across classes, as in the Planetoid splits.
    """
    if min(n_train, n_val, n_test) < 0 or n_train + n_val + n_test > g.n:
        raise ValueError(f"split sizes {n_train}+{n_val}+{n_test} exceed n={g.n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(g.n)
    if stratified and g.labels is not None:
        k = g.num_classes
        per = [order[g.labels[order] == c] for c in range(k)]
        quota = [n_train // k + (1 if c < n_train % k else 0) for c in range(k)]
        train = np.concatenate([p[:q] for p, q in zip(per, quota)])
        if len(train) < n_train:
            raise ValueError("not enough labeled nodes per class for a stratified split")
        rest = order[~np.isin(order, train)]
    else:
        train, rest = order[:n_train], order[n_train:]
    val, test = rest[:n_val], rest[n_val:n_val + n_test]
    masks = []
    for ids in (train, val, test):
        m = np.zeros(g.n, dtype=bool)
        m[ids] = True
        masks.append(m)
    return g.with_masks(*masks)


def subsample(g, max_nodes, seed):
    """Seeded induced subsample of at most ``max_nodes`` nodes."""
    if g.n <= max_nodes:
        return g
    ids = np.sort(np.random.default_rng(seed).choice(g.n, size=max_nodes, replace=False))
    return induced_subgraph(g, ids)[0]


def remove_nodes(g, mask):
    """Induced subgraph on the nodes where ``mask`` is False."""
    return induced_subgraph(g, np.flatnonzero(~np.asarray(mask)))


# --- synthetic graphs -------------------------------------------------------------

def generate_sbm(block_sizes, p_intra, p_inter, feature_dim, class_signal, seed,
                 attribute_correlation=0.9):
    """Stochastic block model with block-aligned features and a sensitive attribute.

    Labels are block ids. Features are standard Gaussian noise with
    ``class_signal`` added on the block's one-hot coordinate, so
    ``class_signal=0`` makes features independent of labels. The binary
    sensitive attribute equals ``block % 2`` with probability
    ``attribute_correlation`` and is a fair coin otherwise.
    """
    block_sizes = [int(b) for b in block_sizes]
    if not block_sizes or min(block_sizes) <= 0:
        raise ValueError("every block needs at least one node")
    if not 0.0 <= p_inter < p_intra <= 1.0:
        raise ValueError("need 0 <= p_inter < p_intra <= 1")
    k = len(block_sizes)
    if feature_dim < k:
        raise ValueError(f"feature_dim {feature_dim} smaller than block count {k}")
    if not 0.0 <= attribute_correlation <= 1.0:
        raise ValueError("attribute_correlation must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(k), block_sizes)
    n = len(labels)

    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_intra, p_inter)
    hit = rng.random(len(iu)) < prob
    edges = np.stack([iu[hit], ju[hit]], axis=1).astype(np.int64)

    features = rng.standard_normal((n, feature_dim))
    features[np.arange(n), labels] += class_signal

    follow = rng.random(n) < attribute_correlation
    coin = rng.integers(0, 2, size=n)
    attributes = np.where(follow, labels % 2, coin).astype(np.int64)
    return Graph(features, edges, labels.astype(np.int64), attributes)
