from collections import Counter

import numpy as np
import pytest
from scipy import stats
from sklearn.metrics import silhouette_score

from conftest import make_graph
from graphaudit.graph import Graph, generate_sbm
from graphaudit.walks import (WalkConfig, context_pairs, embed, negative_distribution, sample_walks,
                              sgns_loss, train_skipgram)


def transitions(walks):
    """Counter over (prev, cur, next) triples."""
    out = Counter()
    for w in walks:
        for a, b, c in zip(w, w[1:], w[2:]):
            out[(a, b, c)] += 1
    return out


def test_path_walks_begin_with_forced_step():
    g = make_graph([(0, 1), (1, 2)])
    walks = sample_walks(g, WalkConfig(walks_per_node=20, walk_length=6))
    from_zero = [w for w in walks if w[0] == 0]
    assert len(from_zero) == 20 and all(w[:2] == [0, 1] for w in from_zero)
    assert all(len(w) == 6 for w in walks)


def test_isolated_nodes_yield_no_walks_and_dead_ends_truncate():
    g = Graph(np.eye(3), np.array([[0, 1]]))
    walks = sample_walks(g, WalkConfig(walks_per_node=3, walk_length=5))
    assert {w[0] for w in walks} == {0, 1}


def test_triangle_has_no_distance_two_mass():
    g = make_graph([(0, 1), (1, 2), (0, 2)])
    counts = transitions(sample_walks(g, WalkConfig(walks_per_node=40, walk_length=1000, q=1e9)))
    nxt = {c: k for (a, b, c), k in counts.items() if (a, b) == (0, 1)}
    assert set(nxt) <= {0, 2}


# kite: 0-1, 1-2, 1-3, 0-2. Arriving at 1 from 0, node 0 is a return (1/p),
# node 2 neighbors 0 (weight 1) and node 3 is at distance two (1/q).
KITE = [(0, 1), (1, 2), (1, 3), (0, 2)]


def kite_next_counts(p, q, walks_per_node=30):
    g = make_graph(KITE)
    counts = transitions(sample_walks(g, WalkConfig(walks_per_node=walks_per_node, walk_length=1000, p=p, q=q)))
    total_steps = sum(counts.values())
    return np.array([counts[(0, 1, x)] for x in (0, 2, 3)]), total_steps


@pytest.mark.parametrize("p,q", [(0.5, 2.0), (2.0, 0.25), (1.0, 1.0)])
def test_second_order_transitions_match_analytic_weights(p, q):
    observed, total = kite_next_counts(p, q)
    assert total >= 1e5
    weights = np.array([1 / p, 1.0, 1 / q])
    expected = observed.sum() * weights / weights.sum()
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_large_q_suppresses_distance_two_node():
    observed, _ = kite_next_counts(1.0, 1e9)
    assert observed[2] == 0 and observed[:2].min() > 0


def test_unbiased_walks_on_four_cycle_are_uniform():
    g = make_graph([(0, 1), (1, 2), (2, 3), (0, 3)])
    counts = transitions(sample_walks(g, WalkConfig(walks_per_node=25, walk_length=1000)))
    for cur in range(4):
        nbrs = g.neighbors()[cur]
        k = np.array([sum(v for (a, b, c), v in counts.items() if b == cur and c == x) for x in nbrs])
        n = k.sum()
        assert abs(k[0] - n / 2) <= 3 * np.sqrt(n / 4)


def test_unit_parameters_reduce_to_first_order_walks():
    g = generate_sbm([15, 15], 0.3, 0.05, 2, 1.0, seed=4)
    counts = transitions(sample_walks(g, WalkConfig(walks_per_node=20, walk_length=400, seed=2)))
    # first-order walk: next step uniform over neighbors of cur, whatever prev was
    for cur in range(g.n):
        nbrs = g.neighbors()[cur]
        if len(nbrs) < 2:
            continue
        obs = np.array([sum(v for (a, b, c), v in counts.items() if b == cur and c == x) for x in nbrs])
        assert stats.chisquare(obs).pvalue > 0.01 / g.n


def test_walks_are_deterministic_and_seed_dependent():
    g = generate_sbm([10, 10], 0.4, 0.05, 2, 1.0, seed=0)
    a = sample_walks(g, WalkConfig(walks_per_node=2, walk_length=10, p=0.5, q=2.0, seed=1))
    b = sample_walks(g, WalkConfig(walks_per_node=2, walk_length=10, p=0.5, q=2.0, seed=1))
    c = sample_walks(g, WalkConfig(walks_per_node=2, walk_length=10, p=0.5, q=2.0, seed=2))
    assert a == b and a != c


def test_config_validation():
    for kw in ({"p": 0}, {"q": -1}, {"walk_length": 1}, {"window": 0}):
        with pytest.raises(ValueError):
            WalkConfig(**kw)
    assert (WalkConfig.deepwalk(p=3.0).p, WalkConfig.deepwalk().q) == (1.0, 1.0)


# --- skipgram -------------------------------------------------------------------------

def test_context_pairs_window():
    t, c = context_pairs([[0, 1, 2]], 1)
    assert sorted(zip(t.tolist(), c.tolist())) == [(0, 1), (1, 0), (1, 2), (2, 1)]
    t, c = context_pairs([[0, 1, 2]], 5)
    assert len(t) == 6


def test_negative_distribution_is_smoothed_unigram():
    p = negative_distribution([[0, 0, 0, 1]], 3)
    np.testing.assert_allclose(p, np.array([3 ** 0.75, 1, 0]) / (3 ** 0.75 + 1))


@pytest.mark.parametrize("dense", [True, False])
def test_sgns_gradients_match_finite_differences(dense):
    rng = np.random.default_rng(0)
    n, d, B, k = 7, 4, 12, 3
    V, U = rng.normal(size=(n, d)), rng.normal(size=(n, d))
    t, c = rng.integers(n, size=B), rng.integers(n, size=B)
    negs = rng.integers(n, size=(B, k))
    _, gV, gU = sgns_loss(V, U, t, c, negs, dense=dense)
    gV, gU = np.asarray(gV), np.asarray(gU)
    h = 1e-6
    for M, G in ((V, gV), (U, gU)):
        num = np.zeros_like(M)
        for idx in np.ndindex(M.shape):
            old = M[idx]
            M[idx] = old + h
            fp = sgns_loss(V, U, t, c, negs, dense=dense)[0]
            M[idx] = old - h
            fm = sgns_loss(V, U, t, c, negs, dense=dense)[0]
            M[idx] = old
            num[idx] = (fp - fm) / (2 * h)
        assert np.linalg.norm(num - G) / (np.linalg.norm(num) + np.linalg.norm(G)) < 1e-6


def test_sgns_dense_and_sparse_agree():
    rng = np.random.default_rng(1)
    V, U = rng.normal(size=(9, 3)), rng.normal(size=(9, 3))
    t, c, negs = rng.integers(9, size=20), rng.integers(9, size=20), rng.integers(9, size=(20, 2))
    a = sgns_loss(V, U, t, c, negs, dense=True)
    b = sgns_loss(V, U, t, c, negs, dense=False)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    for x, y in zip(a[1:], b[1:]):
        np.testing.assert_allclose(np.asarray(x), np.asarray(y), atol=1e-12)


def two_cliques(size=8):
    edges = [(i, j) for i in range(size) for j in range(i + 1, size)]
    edges += [(i + size, j + size) for i, j in edges]
    return make_graph(edges, n=2 * size)


def test_loss_decreases_over_epochs():
    cfg = WalkConfig(walks_per_node=5, walk_length=20, window=3, dim=16, epochs=4, batch_size=256)
    _, history = embed(two_cliques(), cfg, return_history=True)
    assert history[-1] < history[0]


def test_cliques_are_closer_inside_than_across():
    emb = embed(two_cliques(), WalkConfig(walks_per_node=10, walk_length=20, window=3, dim=16,
                                           epochs=3, batch_size=256)).l2_normalized()
    C = emb.vectors @ emb.vectors.T
    same = np.equal.outer(np.arange(16) < 8, np.arange(16) < 8)
    off = ~np.eye(16, dtype=bool)
    assert C[same & off].mean() > C[~same].mean()


def test_embedding_is_bit_identical_per_seed():
    cfg = WalkConfig(walks_per_node=2, walk_length=10, window=2, dim=8, batch_size=64, seed=3)
    a, b = embed(two_cliques(), cfg), embed(two_cliques(), cfg)
    assert np.array_equal(a.vectors, b.vectors)


def test_sbm_communities_have_positive_silhouette():
    g = generate_sbm([60, 60], 0.15, 0.005, 2, 1.0, seed=0)
    emb = embed(g, WalkConfig(walks_per_node=5, walk_length=30, window=5, dim=32, batch_size=1024))
    assert silhouette_score(emb.vectors, g.labels) > 0


def test_skipgram_errors():
    with pytest.raises(ValueError):
        train_skipgram([], 3, WalkConfig())
    with pytest.raises(ValueError):
        train_skipgram([[0]], 3, WalkConfig())
