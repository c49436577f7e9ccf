"""Prediction paths: single-shot inference and the k-sample majority vote."""

from __future__ import annotations

import os
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import augment
from .errors import ConfigError
from .features import extract_features
from .nn import Model
from .serialize import ModelBundle
from .train import TrainingConfig, accuracy, make_batch, per_class_prf, support_weighted_f1


@dataclass(frozen=True)
class Prediction:
    probabilities: np.ndarray
    label: str
    k: int
    votes: dict | None = None
    latency_s: float = 0.0


def _config_for(bundle: ModelBundle) -> TrainingConfig:
    d = bundle.training_dict()
    if d:
        return TrainingConfig.from_dict(d)
    arch = bundle.arch
    return TrainingConfig(mode=arch.mode, r=arch.r, aggregation=arch.aggregation)


def _forward_samples(bundle: ModelBundle, model: Model, config, samples, feats_scaled):
    # One forward per sample: the k votes of an instance are independent
    # evaluations (parallelizable across workers), not one fused batch.
    rows = []
    for sample in samples:
        batch = make_batch([sample], [feats_scaled], config, bundle.vocab)
        probs, _ = model.forward(batch, train_mode=False)
        rows.append(probs[0])
    return np.vstack(rows)


def _vote_winner(probs: np.ndarray) -> tuple[int, dict]:
    """Majority label over the argmaxes of k distributions.

    Ties break by highest summed probability among the tied labels, then by
    lowest class id.
    """
    votes = Counter(int(np.argmax(p)) for p in probs)
    top = max(votes.values())
    tied = [label for label, count in votes.items() if count == top]
    summed = probs.sum(axis=0)
    winner = min(tied, key=lambda c: (-summed[c], c))
    return winner, dict(votes)


def _predict(bundle: ModelBundle, instance, k, seed):
    if instance.n == 0:
        raise ConfigError("cannot predict an empty instance")
    t0 = time.perf_counter()
    config = _config_for(bundle)
    model = Model(bundle.arch, params=bundle.params)
    rng = np.random.default_rng(seed)
    samples = augment.inference_inputs(
        instance, bundle.arch.mode, k, rng,
        r_multi=bundle.arch.r, multi_mode=config.multi_mode,
    )
    feats = bundle.scaler.transform(extract_features(instance))
    probs = _forward_samples(bundle, model, config, samples, feats)
    if k == 1:
        class_id = int(np.argmax(probs[0]))
        mean_probs = probs[0]
        votes = None
    else:
        class_id, votes_ids = _vote_winner(probs)
        votes = {bundle.class_vocab.name_of(c): n for c, n in sorted(votes_ids.items())}
        mean_probs = probs.mean(axis=0)
    return Prediction(
        probabilities=mean_probs,
        label=bundle.class_vocab.name_of(class_id),
        k=k,
        votes=votes,
        latency_s=time.perf_counter() - t0,
    )


def predict_one(bundle: ModelBundle, instance, seed=0) -> Prediction:
    """Single-shot prediction from one inference input."""
    return _predict(bundle, instance, 1, seed)


def predict_kvote(bundle: ModelBundle, instance, k=10, seed=0) -> Prediction:
    """k-sample majority-vote prediction; k=1 degenerates to predict_one."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    return _predict(bundle, instance, k, seed)


def evaluate(bundle: ModelBundle, instances, test_indices, k=1, seed=0,
             bundle_path=None, n_examples=3) -> dict:
    """Test-set metrics report: weighted F1, accuracy, per-sample runtime,
    bundle size, a per-class table, and misclassified examples for the
    lowest-precision and lowest-recall classes."""
    test_indices = list(test_indices)
    if not test_indices:
        raise ConfigError("empty test set")
    class_vocab = bundle.class_vocab
    y_true, y_pred, latencies = [], [], []
    errors = []  # (index, true_id, pred_id)
    for j, i in enumerate(test_indices):
        inst = instances[i]
        if inst.label is None:
            raise ConfigError(f"test instance {i} has no label")
        pred = _predict(bundle, inst, k, np.random.default_rng([seed, j]).integers(2**63))
        true_id = class_vocab.id_of(inst.label)
        pred_id = class_vocab.id_of(pred.label)
        y_true.append(true_id)
        y_pred.append(pred_id)
        latencies.append(pred.latency_s)
        if pred_id != true_id:
            errors.append((i, true_id, pred_id))

    n_classes = len(class_vocab)
    precision, recall, f1, support = per_class_prf(y_true, y_pred, n_classes)
    table = [
        {
            "class": class_vocab.name_of(c),
            "precision": float(precision[c]),
            "recall": float(recall[c]),
            "f1": float(f1[c]),
            "support": int(support[c]),
        }
        for c in range(n_classes)
        if support[c] > 0
    ]

    def _examples(class_id, as_predicted):
        out = []
        for i, true_id, pred_id in errors:
            hit = pred_id == class_id if as_predicted else true_id == class_id
            if hit:
                out.append(
                    {
                        "values": list(instances[i].values[:10]),
                        "true_type": class_vocab.name_of(true_id),
                        "predicted_type": class_vocab.name_of(pred_id),
                    }
                )
            if len(out) >= n_examples:
                break
        return out

    # A class that is never predicted has no false positives to show, so it is
    # reported purely as a recall failure; rank precision only over classes
    # that actually appear among the predictions.
    predicted_ids = set(y_pred)
    precision_rows = [
        row for row in table if class_vocab.id_of(row["class"]) in predicted_ids
    ] or table
    low_precision = min(precision_rows, key=lambda r: r["precision"])["class"]
    low_recall = min(table, key=lambda r: r["recall"])["class"]
    report = {
        "k": k,
        "f1_weighted": support_weighted_f1(y_true, y_pred, n_classes),
        "accuracy": accuracy(y_true, y_pred),
        "runtime_mean_s": float(np.mean(latencies)),
        "runtime_std_s": float(np.std(latencies)),
        "size_mb": (os.path.getsize(bundle_path) / 1e6) if bundle_path else None,
        "per_class": table,
        "low_precision": {
            "class": low_precision,
            "examples": _examples(class_vocab.id_of(low_precision), as_predicted=True),
        },
        "low_recall": {
            "class": low_recall,
            "examples": _examples(class_vocab.id_of(low_recall), as_predicted=False),
        },
    }
    return report
