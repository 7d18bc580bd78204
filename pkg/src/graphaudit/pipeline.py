"""Experiment orchestration: build graph, train target, release embeddings, run attacks."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import gnn, walks
from . import membership as mia
from . import reconstruction as rec
from .attribute import AttributeDataset, evaluate_attribute_attack
from .classifiers import ClassifierConfig
from .config import ConfigError, derive_seed
from .embedding import EmbeddingMatrix, load_embeddings, save_embeddings
from .graph import (generate_sbm, induced_subgraph, load_graph_dir, make_inductive_masks, nested_split,
                    save_graph, subsample)


class MissingArtifactError(FileNotFoundError):
    pass


@dataclass
class Target:
    """A trained target: the graph it lives on, the model (GNNs only) and its released embeddings."""

    graph: object
    model: object
    embeddings: EmbeddingMatrix
    summary: dict


# --- stages -----------------------------------------------------------------------

def build_graph(cfg, seed):
    d = cfg.dataset
    if d.source == "sbm":
        g = generate_sbm(d.blocks, d.p_intra, d.p_inter, d.feature_dim, d.class_signal,
                         derive_seed(seed, "graph"), d.attribute_correlation)
    else:
        g = load_graph_dir(d.directory)
        if d.max_nodes:
            g = subsample(g, d.max_nodes, derive_seed(seed, "subsample"))
    if d.train_size + d.val_size + d.test_size > g.n:
        raise ConfigError(f"dataset.train_size: split {d.train_size}+{d.val_size}+{d.test_size} "
                          f"exceeds the {g.n} nodes of the graph")
    if g.labels is None and cfg.target.is_gnn:
        raise ConfigError("dataset.directory: a gcn/sage target needs labels.csv")
    if g.labels is None:
        return g
    return make_inductive_masks(g, d.train_size, d.val_size, d.test_size, derive_seed(seed, "split"),
                                stratified=d.stratified)


def gnn_config(cfg, seed, component="target"):
    t = cfg.target
    return gnn.GnnConfig(arch=t.model, num_layers=t.num_layers, hidden_dim=t.hidden_dim or None,
                         embedding_layer=t.embedding_layer, dropout=t.dropout, epochs=t.epochs,
                         lr=t.lr, optimizer=t.optimizer, seed=derive_seed(seed, component))


def walk_config(cfg, seed):
    t = cfg.target
    p, q = (1.0, 1.0) if t.model == "deepwalk" else (t.p, t.q)
    return walks.WalkConfig(walks_per_node=t.walks_per_node, walk_length=t.walk_length, window=t.window,
                            dim=t.dim, negatives=t.negatives, epochs=t.walk_epochs, p=p, q=q,
                            lr=t.walk_lr, batch_size=t.batch_size, seed=derive_seed(seed, "target"))


def summarize_target(g, model, name):
    out = {"model": name, "n_nodes": int(g.n), "n_edges": int(g.num_edges)}
    if model is None:
        return out
    tr, te = np.flatnonzero(g.train_mask), np.flatnonzero(g.test_mask)
    out["n_train"], out["n_test"] = int(len(tr)), int(len(te))
    out["train_acc"] = gnn.accuracy(model, induced_subgraph(g, tr)[0])
    if len(te):
        out["test_acc"] = gnn.accuracy(model, induced_subgraph(g, te)[0])
        out["generalization_gap"] = out["train_acc"] - out["test_acc"]
    return out


def train_target(cfg, g, seed):
    """Train the configured target and release embeddings for every node of ``g``."""
    if cfg.target.is_gnn:
        model = gnn.train(g, gnn_config(cfg, seed))
        emb = gnn.extract_embeddings(model, g)
    else:
        model = None
        emb = walks.embed(g, walk_config(cfg, seed))
    return Target(g, model, emb, summarize_target(g, model, cfg.target.model))


# --- persisted artifacts ------------------------------------------------------------

def seed_dir(out, seed):
    return os.path.join(out, f"seed_{seed}")


def save_target(target, directory):
    os.makedirs(directory, exist_ok=True)
    save_graph(target.graph, os.path.join(directory, "graph"))
    if target.model is not None:
        gnn.save_checkpoint(target.model, os.path.join(directory, "model.ckpt"))
    save_embeddings(target.embeddings, os.path.join(directory, "embeddings.csv"))
    with open(os.path.join(directory, "target.json"), "w") as fh:
        json.dump(target.summary, fh, sort_keys=True, indent=2)


def load_target(directory, needs_model, config_path="CONFIG"):
    hint = f"graphaudit train --config {config_path}"
    required = ["graph/edges.txt", "graph/features.csv", "embeddings.csv", "target.json"]
    if needs_model:
        required.append("model.ckpt")
    for name in required:
        path = os.path.join(directory, name)
        if not os.path.exists(path):
            raise MissingArtifactError(f"missing artifact {path}; produce it with `{hint}`")
    g = load_graph_dir(os.path.join(directory, "graph"))
    model = gnn.load_checkpoint(os.path.join(directory, "model.ckpt")) if needs_model else None
    emb = load_embeddings(os.path.join(directory, "embeddings.csv"))
    with open(os.path.join(directory, "target.json")) as fh:
        summary = json.load(fh)
    return Target(g, model, emb, summary)


# --- attacks ------------------------------------------------------------------------

def membership_attacks(cfg, target, seed):
    m = cfg.membership
    g = target.graph
    shared = {}

    def setup():
        # built on first use so a failure is recorded against the attack that hit it
        if not shared:
            tr, te = np.flatnonzero(g.train_mask), np.flatnonzero(g.test_mask)
            shared["oracle"] = gnn.InductiveOracle(target.model, g, [tr, te])
            shared["eval"] = mia.balanced_eval_set(tr, te, derive_seed(seed, "membership.eval"),
                                                   size=m.eval_size or None)
        return shared["oracle"], *shared["eval"]

    def confidence():
        oracle, ids, bits = setup()
        tau = None if m.threshold == "sweep" else float(m.threshold)
        return mia.confidence_attack(oracle.predict(ids), bits, tau,
                                     seed=derive_seed(seed, "membership.confidence"))

    def shadow():
        oracle, ids, bits = setup()
        aux_ids = np.flatnonzero(~(g.train_mask | g.val_mask | g.test_mask))
        aux, _ = induced_subgraph(g, aux_ids)
        attack_cfg = mia.ShadowConfig(m.shadow_classifier, ClassifierConfig(), m.shadow_train_size or None,
                                      derive_seed(seed, "membership.shadow"))
        return mia.shadow_attack(oracle, aux, gnn_config(cfg, seed, "membership.shadow_model"),
                                 attack_cfg, ids, bits)

    def whitebox():
        oracle, ids, bits = setup()
        rows, abits = mia.pick_anchors(bits, m.anchors, derive_seed(seed, "membership.anchors"))
        wcfg = mia.WhiteboxConfig(hidden_dim=m.whitebox_hidden_dim, epochs=m.whitebox_epochs,
                                  seed=derive_seed(seed, "membership.whitebox"))
        return mia.whitebox_attack(oracle.embed(ids), rows, abits, wcfg, true_membership=bits)

    modes = {"confidence": confidence, "shadow": shadow, "whitebox": whitebox}
    return [(f"membership.{mode}", lambda fn=modes[mode]: fn().to_dict()) for mode in m.modes]


def reconstruction_attack(cfg, target, seed, artifact_dir=None):
    r = cfg.reconstruction
    g = target.graph
    aux_ids, tgt_ids, rest_ids = nested_split(g.n, r.aux_fraction, r.target_fraction,
                                              derive_seed(seed, "reconstruction.split"))
    aux, _ = induced_subgraph(g, aux_ids)
    tgt, _ = induced_subgraph(g, tgt_ids)
    val = induced_subgraph(g, rest_ids)[0] if len(rest_ids) > 1 else None
    ae_cfg = rec.AutoencoderConfig(hidden_dim=r.hidden_dim, emb_dim=r.emb_dim, decoder=r.decoder, loss=r.loss,
                                   epochs=r.epochs, lr=r.lr, seed=derive_seed(seed, "reconstruction.model"))
    if r.release == "encoder":
        ae = rec.train_autoencoder(aux, ae_cfg, val=val)
        Z = ae.encode(tgt)
    else:
        ae = rec.train_autoencoder(aux, ae_cfg, aux_embeddings=target.embeddings.rows(aux_ids))
        Z = target.embeddings.rows(tgt_ids)
    density = r.density or 2.0 * aux.num_edges / max(aux.n * (aux.n - 1), 1)
    result = rec.reconstruct_target(ae, Z, r.threshold_policy, r.threshold, density, truth=tgt,
                                    seed=derive_seed(seed, "reconstruction.eval"))
    out = result.to_dict()
    out.update({"release": r.release, "loss": r.loss, "aux_fraction": r.aux_fraction,
                "target_fraction": r.target_fraction, "decoder_params": int(ae.num_decoder_params),
                "aux_train_auc": ae.history["train_auc"][-1]})
    if ae.history["val_auc"]:
        out["val_auc"] = ae.history["val_auc"][-1]
        out["val_ap"] = ae.history["val_ap"][-1]
    if artifact_dir is not None:
        os.makedirs(artifact_dir, exist_ok=True)
        stem = os.path.join(artifact_dir, f"reconstruction_{r.decoder}")
        rec.save_edge_list(result, stem + "_edges.txt")
        if result.n <= 2000:
            rec.save_scores(result, stem + "_scores.csv")
    return out


def attribute_attack(cfg, target, seed):
    a = cfg.attribute
    g = target.graph
    if g.attributes is None:
        raise mia.AttackError("graph carries no sensitive attributes (attributes.csv)")
    _, attrs = np.unique(g.attributes, return_inverse=True)
    aux_ids, tgt_ids, _ = nested_split(g.n, a.aux_fraction, a.target_fraction,
                                       derive_seed(seed, "attribute.split"))
    ds = AttributeDataset(target.embeddings.rows(np.arange(g.n)), attrs, aux_ids, tgt_ids)
    ccfg = ClassifierConfig(hidden_dim=a.hidden_dim, epochs=a.epochs, lr=a.lr)
    out = evaluate_attribute_attack(ds, a.classifier, ccfg, derive_seed(seed, "attribute.model"),
                                    null_shuffles=a.null_shuffles)
    out.update({"aux_fraction": a.aux_fraction, "target_fraction": a.target_fraction,
                "embedding": cfg.target.model})
    return out


def planned_attacks(cfg, target, seed, artifact_dir=None):
    """``(label, thunk)`` pairs for every configured attack, in config order."""
    plan = []
    for attack in cfg.experiment.attacks:
        if attack == "membership":
            plan.extend(membership_attacks(cfg, target, seed))
        elif attack == "reconstruction":
            plan.append((f"reconstruction.{cfg.reconstruction.decoder}",
                         lambda: reconstruction_attack(cfg, target, seed, artifact_dir)))
        else:
            plan.append((f"attribute.{cfg.attribute.classifier}", lambda: attribute_attack(cfg, target, seed)))
    return plan


def dataset_name(cfg):
    d = cfg.dataset
    return "sbm" if d.source == "sbm" else os.path.basename(os.path.normpath(d.directory))


def attack_seed(cfg, target, seed, artifact_dir=None):
    """Run every configured attack; failures are recorded rather than raised."""
    results, errors, timings = [], [], {}
    for label, thunk in planned_attacks(cfg, target, seed, artifact_dir):
        start = time.perf_counter()
        try:
            entry = thunk()
        except Exception as exc:  # recorded so the remaining attacks still report
            errors.append({"label": label, "error": f"{type(exc).__name__}: {exc}"})
        else:
            entry.update(label=label, dataset=dataset_name(cfg), arch=cfg.target.model)
            results.append(entry)
        timings[label] = time.perf_counter() - start
    return {"seed": int(seed), "target": target.summary, "results": results, "errors": errors,
            "timings": timings}


def run_seed(cfg, seed, persist=True):
    """Full pipeline for one master seed."""
    start = time.perf_counter()
    g = build_graph(cfg, seed)
    target = train_target(cfg, g, seed)
    train_time = time.perf_counter() - start
    directory = seed_dir(cfg.out, seed) if persist else None
    if persist:
        save_target(target, directory)
    run = attack_seed(cfg, target, seed, directory)
    run["timings"]["train_target"] = train_time
    return run
