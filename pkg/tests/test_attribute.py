import numpy as np
import pytest

from graphaudit import tensor as T
from graphaudit.attribute import (AttributeDataset, evaluate_attribute_attack, infer_attributes,
                                  permutation_null_f1, train_attribute_attack)
from graphaudit.classifiers import ClassifierConfig
from graphaudit.graph import generate_sbm, nested_split
from graphaudit.walks import WalkConfig, embed

FAST = ClassifierConfig(hidden_dim=32, epochs=100)


def one_hot_dataset(n=120, k=3, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, k, size=n)
    s[:k] = np.arange(k)
    perm = rng.permutation(n)
    return AttributeDataset(np.eye(k)[s], s, perm[: n // 3], perm[n // 3:])


@pytest.mark.parametrize("kind", ["logreg", "mlp"])
def test_one_hot_attributes_are_learned_perfectly(kind):
    ds = one_hot_dataset()
    model = train_attribute_attack(ds, kind, FAST)
    Xa, ya = ds.aux
    pred, f1 = infer_attributes(model, Xa, ya)
    assert np.all(pred == ya) and f1 == 1.0
    np.testing.assert_allclose(model.predict_proba(Xa).sum(axis=1), 1.0)
    assert model.num_classes == 3 and model.kind == kind


def test_shuffled_attributes_fall_to_the_null():
    rng = np.random.default_rng(1)
    n = 400
    s = rng.integers(0, 2, size=n)
    X = rng.normal(size=(n, 8))
    perm = rng.permutation(n)
    ds = AttributeDataset(X, s, perm[:160], perm[160:])
    out = evaluate_attribute_attack(ds, "mlp", FAST, seed=0, null_shuffles=10)
    assert abs(out["f1_macro"] - out["null_f1"]) <= 0.1
    assert abs(out["f1_macro"] - out["chance_f1"]) <= 0.1


def test_report_fields():
    out = evaluate_attribute_attack(one_hot_dataset(), "logreg", FAST)
    assert out["f1_over_majority"] == pytest.approx(out["f1_macro"] - out["majority_baseline_f1"])
    assert (out["n_aux"], out["n_target"], out["num_categories"]) == (40, 80, 3)
    assert "null_f1" not in out


def test_null_is_deterministic():
    ds = one_hot_dataset()
    assert permutation_null_f1(ds, "logreg", FAST, 2, 3) == permutation_null_f1(ds, "logreg", FAST, 2, 3)


def test_dataset_validation():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError, match="overlap"):
        AttributeDataset(X, [0, 1, 0, 1], [0, 1], [1, 2])
    with pytest.raises(ValueError, match="contiguous"):
        AttributeDataset(X, [0, 2, 0, 2], [0, 1], [2, 3])
    with pytest.raises(ValueError):
        AttributeDataset(X, [0, 1], [0], [1])


def test_attack_errors():
    ds = AttributeDataset(np.eye(4), [0, 0, 1, 1], [0, 1], [2, 3])
    with pytest.raises(ValueError, match="single"):
        train_attribute_attack(ds)
    model = train_attribute_attack(one_hot_dataset(), "logreg", FAST)
    with pytest.raises(T.ShapeError):
        infer_attributes(model, np.zeros((2, 5)))


def test_predictions_follow_row_order():
    ds = one_hot_dataset(seed=2)
    rng = np.random.default_rng(3)
    Xt = rng.normal(size=(50, 3))
    model = train_attribute_attack(ds, "mlp", FAST)
    perm = rng.permutation(50)
    pred, _ = infer_attributes(model, Xt)
    pred_perm, _ = infer_attributes(model, Xt[perm])
    assert np.array_equal(pred_perm, pred[perm])


def test_more_knowledge_does_not_hurt():
    cfg = WalkConfig(walk_length=40, dim=64, q=0.5)
    f1 = {0.3: [], 0.5: []}
    for seed in range(5):
        g = generate_sbm([200, 200], 0.05, 0.01, 16, 1.0, seed=seed)
        emb = embed(g, WalkConfig(**{**cfg.__dict__, "seed": seed}))
        for frac in f1:
            aux, tgt, _ = nested_split(g.n, frac, 0.5, seed=seed)
            ds = AttributeDataset(emb.vectors, g.attributes, aux, tgt)
            f1[frac].append(evaluate_attribute_attack(ds, "mlp", seed=seed)["f1_macro"])
    assert np.mean(f1[0.5]) >= np.mean(f1[0.3])
