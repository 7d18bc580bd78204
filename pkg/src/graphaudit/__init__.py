"""Privacy leakage audits for graph neural networks and graph embeddings."""

__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, derive_seed, load_config  # noqa: E402
from .embedding import EmbeddingMatrix, load_embeddings, save_embeddings  # noqa: E402
from .graph import Graph, generate_sbm, load_graph, load_graph_dir, save_graph  # noqa: E402
from .gnn import GnnConfig, InductiveOracle, NodeClassifier  # noqa: E402
from .metrics import MetricBundle, advantage, average_precision, f1_macro, roc_auc  # noqa: E402
from .walks import WalkConfig  # noqa: E402

__all__ = [
    "ConfigError", "EmbeddingMatrix", "ExperimentConfig", "GnnConfig", "Graph", "InductiveOracle",
    "MetricBundle", "NodeClassifier", "WalkConfig", "advantage", "average_precision", "derive_seed",
    "f1_macro", "generate_sbm", "load_config", "load_embeddings", "load_graph", "load_graph_dir",
    "roc_auc", "save_embeddings", "save_graph",
]
