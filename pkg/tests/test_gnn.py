import numpy as np
import pytest

from conftest import make_graph
from graphaudit import tensor as T
from graphaudit.gnn import (GnnConfig, InductiveOracle, accuracy, extract_embeddings, gcn_forward,
                            init_classifier, load_checkpoint, predict, sage_forward, save_checkpoint, train)
from graphaudit.graph import Graph, generate_sbm, induced_subgraph, make_inductive_masks, normalize_adjacency
from graphaudit.metrics import accuracy as acc_metric
from graphaudit.classifiers import fit_classifier


def set_weights(model, mats):
    for W, m in zip(model.weights, mats):
        W.data = np.asarray(m, dtype=np.float64)


def dense_forward(X, weights):
    h = X
    for l, W in enumerate(weights):
        h = h @ W
        if l < len(weights) - 1:
            h = np.maximum(h, 0.0)
    return h


# --- forward passes ---------------------------------------------------------------------

@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_zero_weights_give_uniform_output(arch, small_sbm):
    model = init_classifier(GnnConfig(arch=arch), small_sbm.features.shape[1], 2)
    set_weights(model, [np.zeros(W.shape) for W in model.weights])
    np.testing.assert_array_equal(predict(model, small_sbm), 0.5)


def test_gcn_without_edges_is_a_dense_network():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 4))
    g = Graph(X, np.zeros((0, 2), dtype=np.int64))
    model = init_classifier(GnnConfig(num_layers=3, hidden_dim=5), 4, 3)
    np.testing.assert_array_equal(normalize_adjacency(g, "sym"), np.eye(6))
    _, z = gcn_forward(model, np.eye(6), X)
    np.testing.assert_allclose(z.data, dense_forward(X, [W.data for W in model.weights]), atol=1e-12)


def test_gcn_two_node_path_by_hand():
    g = make_graph([(0, 1)])
    model = init_classifier(GnnConfig(hidden_dim=2), 2, 2)
    W0, W1 = np.array([[1.0, -1.0], [2.0, 0.5]]), np.array([[1.0, 0.0], [0.0, 3.0]])
    set_weights(model, [W0, W1])
    A = np.full((2, 2), 0.5)
    # hand-expanded products
    h1 = np.maximum(A @ (np.eye(2) @ W0), 0)
    assert h1.tolist() == [[1.5, 0.0], [1.5, 0.0]]
    z = A @ (h1 @ W1)
    acts, logits = gcn_forward(model, normalize_adjacency(g), np.eye(2))
    np.testing.assert_allclose(acts[1].data, h1, atol=1e-15)
    np.testing.assert_allclose(logits.data, z, atol=1e-15)
    assert z.tolist() == [[1.5, 0.0], [1.5, 0.0]]


def test_gcn_shape_errors():
    model = init_classifier(GnnConfig(), 3, 2)
    with pytest.raises(T.ShapeError):
        gcn_forward(model, np.eye(4), np.ones((4, 5)))
    with pytest.raises(T.ShapeError):
        gcn_forward(model, np.eye(3), np.ones((4, 3)))


def sage_layer_oracle(g, X):
    out = np.zeros_like(X)
    for v in range(g.n):
        nb = g.neighbors()[v]
        if len(nb):
            out[v] = np.mean([X[u] for u in nb], axis=0)
    return np.concatenate([X, out], axis=1)


def test_sage_neighbor_means():
    g = make_graph([(0, 1), (0, 2), (0, 3)], n=5)
    X = np.zeros((5, 3))
    X[1:4] = np.eye(3)
    cat = sage_layer_oracle(g, X)
    np.testing.assert_allclose(cat[0, 3:], [1 / 3] * 3)
    np.testing.assert_array_equal(cat[4, 3:], 0.0)
    model = init_classifier(GnnConfig(arch="sage", hidden_dim=4), 3, 2)
    acts, z = sage_forward(model, g, X)
    W0, W1 = (W.data for W in model.weights)
    h1 = np.maximum(cat @ W0, 0)
    np.testing.assert_allclose(acts[1].data, h1, atol=1e-12)
    np.testing.assert_allclose(z.data, sage_layer_oracle(g, h1) @ W1, atol=1e-12)


def test_sage_identical_neighbor_mean_equals_self():
    g = Graph(np.array([[1.0, 2.0], [1.0, 2.0]]), np.array([[0, 1]]))
    cat = sage_layer_oracle(g, g.features)
    np.testing.assert_array_equal(cat[:, :2], cat[:, 2:])


@pytest.mark.parametrize("arch,factor", [("gcn", 1), ("sage", 2)])
def test_weight_shapes(arch, factor):
    model = init_classifier(GnnConfig(arch=arch, num_layers=3, hidden_dim=7), 5, 4)
    assert [W.shape for W in model.weights] == [(5 * factor, 7), (7 * factor, 7), (7 * factor, 4)]


def test_config_validation():
    with pytest.raises(ValueError):
        GnnConfig(num_layers=1)
    with pytest.raises(ValueError):
        GnnConfig(num_layers=2, embedding_layer=2)
    with pytest.raises(ValueError):
        GnnConfig(dropout=1.0)
    with pytest.raises(ValueError):
        GnnConfig(arch="gat")


# --- training -----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def strong_sbm():
    g = generate_sbm([50, 50], 0.2, 0.01, 10, 3.0, seed=0)
    return make_inductive_masks(g, 60, 0, 40, seed=0)


@pytest.fixture(scope="module")
def strong_model(strong_sbm):
    return train(strong_sbm, GnnConfig(seed=0))


def test_train_accuracy_on_separable_sbm(strong_sbm, strong_model):
    assert max(strong_model.history["train_acc"]) >= 0.95
    assert len(strong_model.history["train_acc"]) == 200


def test_trained_model_is_confident_on_block_zero(strong_sbm, strong_model):
    p = predict(strong_model, strong_sbm, np.flatnonzero(strong_sbm.labels == 0))
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.median(p[:, 0]) >= 0.9


def test_zero_epochs_returns_initialization(strong_sbm):
    cfg = GnnConfig(epochs=0, seed=3)
    model = train(strong_sbm, cfg)
    init = init_classifier(cfg, strong_sbm.features.shape[1], 2)
    for a, b in zip(model.weights, init.weights):
        assert np.array_equal(a.data, b.data)


def test_training_is_deterministic(strong_sbm):
    a = train(strong_sbm, GnnConfig(epochs=20, seed=5, dropout=0.3))
    b = train(strong_sbm, GnnConfig(epochs=20, seed=5, dropout=0.3))
    for x, y in zip(a.weights, b.weights):
        assert np.array_equal(x.data, y.data)


def test_train_errors(strong_sbm):
    with pytest.raises(ValueError, match="no labeled train"):
        train(strong_sbm.with_masks(), GnnConfig())
    unlabeled = Graph(strong_sbm.features, strong_sbm.edges, train_mask=strong_sbm.train_mask)
    with pytest.raises(ValueError, match="labels"):
        train(unlabeled, GnnConfig())


@pytest.mark.parametrize("arch", ["gcn", "sage"])
def test_inductive_contract_bit_identical(arch, small_sbm):
    cfg = GnnConfig(arch=arch, epochs=30, seed=1)
    full = train(small_sbm, cfg)
    keep = np.flatnonzero(~small_sbm.mask("test"))
    pruned, _ = induced_subgraph(small_sbm, keep)
    alone = train(pruned, cfg)
    for a, b in zip(full.weights, alone.weights):
        assert np.array_equal(a.data, b.data)


def test_predict_and_embedding_errors(strong_sbm, strong_model):
    with pytest.raises(KeyError):
        predict(strong_model, strong_sbm, [strong_sbm.n])
    with pytest.raises(IndexError):
        extract_embeddings(strong_model, strong_sbm, 2)
    with pytest.raises(IndexError):
        extract_embeddings(strong_model, strong_sbm, 0)


def test_embeddings_are_hidden_activations(strong_sbm, strong_model):
    emb = extract_embeddings(strong_model, strong_sbm, 1)
    assert emb.vectors.shape == (strong_sbm.n, 16)
    again = extract_embeddings(strong_model, strong_sbm, 1)
    assert np.array_equal(emb.vectors, again.vectors)
    sub = extract_embeddings(strong_model, strong_sbm, 1, [3, 1])
    assert np.array_equal(sub.vectors, emb.vectors[[3, 1]])


def test_accuracy_helper_matches_metric(strong_sbm, strong_model):
    ids = np.flatnonzero(strong_sbm.mask("test"))
    pred = np.argmax(predict(strong_model, strong_sbm, ids), axis=1)
    assert accuracy(strong_model, strong_sbm, ids) == acc_metric(pred, strong_sbm.labels[ids])


def test_checkpoint_round_trip(tmp_path, strong_sbm, strong_model):
    save_checkpoint(strong_model, tmp_path / "m.ckpt")
    back = load_checkpoint(tmp_path / "m.ckpt")
    assert back.config == strong_model.config
    for a, b in zip(back.weights, strong_model.weights):
        assert np.array_equal(a.data, b.data)
    (tmp_path / "bad").write_text("hello\n")
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "bad")


# --- leakage-related trends ----------------------------------------------------------------

def test_inductive_oracle_routes_queries(leaky_sbm):
    model = train(leaky_sbm, GnnConfig(epochs=50))
    tr, te = np.flatnonzero(leaky_sbm.mask("train")), np.flatnonzero(leaky_sbm.mask("test"))
    oracle = InductiveOracle(model, leaky_sbm, [tr, te])
    g_tr = induced_subgraph(leaky_sbm, tr)[0]
    np.testing.assert_array_equal(oracle([tr[2], tr[0]]), predict(model, g_tr, [2, 0]))
    np.testing.assert_array_equal(oracle.embed([tr[1]]), extract_embeddings(model, g_tr, 1, [1]).vectors)
    with pytest.raises(KeyError):
        oracle([np.flatnonzero(~(leaky_sbm.mask("train") | leaky_sbm.mask("test")))[0]])
    with pytest.raises(ValueError):
        InductiveOracle(model, leaky_sbm, [tr, tr])


def test_train_confidence_exceeds_test_confidence(leaky_sbm):
    for seed in range(3):
        model = train(leaky_sbm, GnnConfig(seed=seed))
        tr, te = np.flatnonzero(leaky_sbm.mask("train")), np.flatnonzero(leaky_sbm.mask("test"))
        oracle = InductiveOracle(model, leaky_sbm, [tr, te])
        ctr, cte = oracle(tr).max(axis=1), oracle(te).max(axis=1)
        for c in range(2):
            assert ctr[leaky_sbm.labels[tr] == c].mean() >= cte[leaky_sbm.labels[te] == c].mean()


def test_generalization_gap_is_positive(leaky_sbm):
    for arch in ("gcn", "sage"):
        model = train(leaky_sbm, GnnConfig(arch=arch))
        assert model.history["train_acc"][-1] > model.history["test_acc"][-1]


def test_deep_stacks_lose_accuracy():
    shallow, deep = [], []
    for seed in range(5):
        g = make_inductive_masks(generate_sbm([100, 100], 0.1, 0.01, 20, 1.5, seed=seed), 60, 0, 140, seed=seed)
        shallow.append(train(g, GnnConfig(num_layers=2, epochs=100, seed=seed)).history["test_acc"][-1])
        deep.append(train(g, GnnConfig(num_layers=16, epochs=100, seed=seed)).history["test_acc"][-1])
    # a trend over seeds: the mean drops and most seeds agree
    assert np.mean(deep) < np.mean(shallow)
    assert sum(d <= s for d, s in zip(deep, shallow)) >= 3


def test_embedding_probe_separates_members(leaky_sbm):
    model = train(leaky_sbm, GnnConfig(seed=0))
    tr, te = np.flatnonzero(leaky_sbm.mask("train")), np.flatnonzero(leaky_sbm.mask("test"))
    oracle = InductiveOracle(model, leaky_sbm, [tr, te])
    rng = np.random.default_rng(0)
    te = rng.choice(te, size=len(tr), replace=False)
    X = np.vstack([oracle.embed(tr), oracle.embed(te)])
    y = np.r_[np.ones(len(tr), int), np.zeros(len(te), int)]
    idx = rng.permutation(len(y))
    half = len(y) // 2
    clf = fit_classifier(X[idx[:half]], y[idx[:half]], kind="logreg", n_classes=2, seed=0)
    assert np.mean(clf.predict(X[idx[half:]]) == y[idx[half:]]) > 0.5
