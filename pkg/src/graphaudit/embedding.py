"""Released node embeddings and their CSV exchange format."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    node_ids: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2 or len(self.node_ids) != len(self.vectors):
            raise ValueError("need one d-dimensional row per node id")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding contains non-finite entries")

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.node_ids)

    def rows(self, node_ids):
        """Vectors for ``node_ids`` in the requested order."""
        index = {int(v): i for i, v in enumerate(self.node_ids)}
        try:
            return self.vectors[[index[int(v)] for v in node_ids]]
        except KeyError as exc:
            raise KeyError(f"node {exc.args[0]} has no embedding") from None

    def l2_normalized(self):
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        return EmbeddingMatrix(self.node_ids, self.vectors / np.where(norms > 0, norms, 1.0))


def save_embeddings(emb, path):
    with open(path, "w") as fh:
        fh.write("node_id," + ",".join(f"d{i}" for i in range(emb.dim)) + "\n")
        for node, row in zip(emb.node_ids, emb.vectors):
            fh.write(f"{int(node)}," + ",".join(f"{x:.17g}" for x in row) + "\n")


def load_embeddings(path, normalize=False):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    emb = EmbeddingMatrix(data[:, 0].astype(np.int64), data[:, 1:].copy())
    return emb.l2_normalized() if normalize else emb
