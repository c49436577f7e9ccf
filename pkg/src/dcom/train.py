"""Training loop: cross-entropy, Adam, plateau LR reduction, F1 metrics.

Each epoch draws one fresh permutation sample per training column, so the
model sees a different ordering of every column's values each pass.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import augment, tokenizers
from .core import ClassVocabulary
from .errors import ConfigError, DiagnosticError
from .features import FeatureScaler, extract_features
from .nn import ArchitectureConfig, Model, zeros_like_params
from .serialize import ModelBundle


# ---------------------------------------------------------------------------
# Loss


def cross_entropy(probs, label, class_weight=1.0):
    """Per-sample weighted cross-entropy and its gradient at the logits.

    Returns (loss, dlogits) with loss = -w * log(p_label) (p clamped at 1e-12)
    and dlogits = w * (p - onehot(label)).
    """
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise ConfigError(f"label {label} out of range for {probs.shape[-1]} classes")
    loss = -class_weight * np.log(max(probs[label], 1e-12))
    dlogits = class_weight * probs.copy()
    dlogits[label] -= class_weight
    return float(loss), dlogits


def cross_entropy_batch(probs, labels, class_weights=None):
    """Mean weighted cross-entropy over a batch; gradient scaled by 1/B."""
    B, C = probs.shape
    w = np.ones(B) if class_weights is None else np.asarray(class_weights)[labels]
    p_true = np.clip(probs[np.arange(B), labels], 1e-12, None)
    loss = float(np.mean(-w * np.log(p_true)))
    dlogits = probs * w[:, None]
    dlogits[np.arange(B), labels] -= w
    return loss, dlogits / B


# ---------------------------------------------------------------------------
# Optimizer and scheduler


@dataclass
class OptimizerState:
    """Adam moments per parameter, plus the current learning rate."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state: OptimizerState):
    """One bias-corrected Adam update, in place on params."""
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise DiagnosticError("non-finite gradient; update aborted")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / (1 - b1**t)
        v_hat = state.v[name] / (1 - b2**t)
        params[name] -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class PlateauScheduler:
    """Halve the learning rate after `patience` consecutive non-improving epochs."""

    learning_rate: float
    factor: float = 0.5
    patience: int = 5
    min_delta: float = 1e-6
    min_lr: float = 0.0
    best: float = -np.inf
    epochs_since_improvement: int = 0

    def step(self, val_metric: float) -> float:
        if val_metric > self.best + self.min_delta:
            self.best = val_metric
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1
            if self.epochs_since_improvement >= self.patience:
                self.learning_rate = max(self.learning_rate * self.factor, self.min_lr)
                self.epochs_since_improvement = 0
        return self.learning_rate


# ---------------------------------------------------------------------------
# Metrics


def confusion_counts(y_true, y_pred, n_classes):
    if len(y_true) != len(y_pred) or len(y_true) == 0:
        raise ConfigError("label lists must be non-empty and equal length")
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        matrix[t, p] += 1
    return matrix


def per_class_prf(y_true, y_pred, n_classes):
    """Per-class precision, recall, F1 and support (zero where undefined)."""
    matrix = confusion_counts(y_true, y_pred, n_classes)
    tp = np.diag(matrix).astype(np.float64)
    pred_count = matrix.sum(axis=0).astype(np.float64)
    support = matrix.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, pred_count, out=np.zeros(n_classes), where=pred_count > 0)
    recall = np.divide(tp, support, out=np.zeros(n_classes), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(n_classes), where=denom > 0)
    return precision, recall, f1, support


def support_weighted_f1(y_true, y_pred, n_classes) -> float:
    """Per-class F1 averaged with weights equal to each class's true count."""
    _, _, f1, support = per_class_prf(y_true, y_pred, n_classes)
    total = support.sum()
    return float((f1 * support).sum() / total)


def accuracy(y_true, y_pred) -> float:
    if len(y_true) == 0:
        raise ConfigError("empty label lists")
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


# ---------------------------------------------------------------------------
# Training configuration and loop


@dataclass
class TrainingConfig:
    mode: str = "single"
    embedding_dim: int = 64
    hidden_size: int = 128
    feature_dim: int = 64
    dense_widths: tuple[int, ...] = (256,)
    dropout: float = 0.3
    aggregation: str = "mean"
    r: int = 45
    multi_mode: str = "pad"  # "pad" | "with_replacement"
    tokenizer: str = "wordpiece"
    vocab_budget: int = 8000
    max_len: int = 128  # single-sequence token cap
    max_len_per_slot: int = 32  # multi-sequence per-slot cap
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-4
    plateau_factor: float = 0.5
    plateau_patience: int = 5
    early_stop_patience: int = 15
    use_class_weights: bool = False

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["dense_widths"] = list(self.dense_widths)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "dense_widths" in d:
            d["dense_widths"] = tuple(d["dense_widths"])
        return cls(**d)


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_f1: float
    learning_rate: float
    wall_time_s: float


def _epoch_rng(seed, epoch, tag):
    return np.random.default_rng([seed, epoch, tag])


def _encode_single(sample, vocab, max_len):
    seq = tokenizers.encode(vocab, sample.text, max_len)
    return seq.ids, seq.attention_mask


def _encode_multi(sample, vocab, max_len):
    ids = np.stack([tokenizers.encode(vocab, t, max_len).ids for t in sample.texts])
    mask = np.stack(
        [tokenizers.encode(vocab, t, max_len).attention_mask for t in sample.texts]
    )
    return ids, mask, np.asarray(sample.pad_mask, dtype=bool)


def make_batch(samples, feats, config: TrainingConfig, vocab):
    """Tokenize a list of augment samples into one model batch dict."""
    if config.mode == "single":
        encoded = [_encode_single(s, vocab, config.max_len) for s in samples]
        ids = np.stack([e[0] for e in encoded])
        tok_mask = np.stack([e[1] for e in encoded])
        # trim trailing all-pad columns to the longest sequence in the batch
        longest = max(1, int(tok_mask.sum(axis=1).max()))
        batch = {"ids": ids[:, :longest], "tok_mask": tok_mask[:, :longest]}
    else:
        encoded = [_encode_multi(s, vocab, config.max_len_per_slot) for s in samples]
        batch = {
            "ids": np.stack([e[0] for e in encoded]),
            "tok_mask": np.stack([e[1] for e in encoded]),
            "slot_mask": np.stack([e[2] for e in encoded]),
        }
    batch["feats"] = np.stack(feats)
    return batch


def _predict_labels(model, instances, indices, scaled_feats, vocab, config, rng):
    """Greedy k=1 predictions for a set of instances (used for validation)."""
    preds = []
    for start in range(0, len(indices), config.batch_size):
        chunk = indices[start : start + config.batch_size]
        samples = [
            augment.inference_inputs(
                instances[i], config.mode, 1, rng,
                r_multi=config.r, multi_mode=config.multi_mode, source=i,
            )[0]
            for i in chunk
        ]
        batch = make_batch(samples, [scaled_feats[i] for i in chunk], config, vocab)
        probs, _ = model.forward(batch, train_mode=False)
        preds.extend(np.argmax(probs, axis=1).tolist())
    return preds


def train_model(instances, split, config: TrainingConfig, seed=0, log_callback=None):
    """Train on the split's train set, select on validation F1.

    Returns (ModelBundle, list of EpochReport).
    """
    labeled = [i for i in split.train if instances[i].label is None]
    if labeled:
        raise ConfigError("all training instances must be labeled")
    class_vocab = ClassVocabulary.from_labels(
        instances[i].label for i in list(split.train) + list(split.validation)
    )

    feats_raw = {i: extract_features(instances[i]) for i in
                 set(split.train) | set(split.validation)}
    scaler = FeatureScaler.fit([feats_raw[i] for i in split.train])
    scaled = {i: scaler.transform(v) for i, v in feats_raw.items()}

    corpus = (" ".join(instances[i].values) for i in split.train)
    vocab = tokenizers.build_vocab(corpus, config.tokenizer, config.vocab_budget)

    arch = ArchitectureConfig(
        mode=config.mode,
        vocab_size=len(vocab),
        n_classes=len(class_vocab),
        embedding_dim=config.embedding_dim,
        hidden_size=config.hidden_size,
        feature_dim=config.feature_dim,
        dense_widths=config.dense_widths,
        dropout=config.dropout,
        aggregation=config.aggregation,
        r=config.r,
    )
    model = Model(arch, seed=seed)

    class_weights = None
    if config.use_class_weights:
        counts = np.zeros(len(class_vocab))
        for i in split.train:
            counts[class_vocab.id_of(instances[i].label)] += 1
        class_weights = counts.sum() / (len(class_vocab) * np.maximum(counts, 1))

    opt = OptimizerState(learning_rate=config.learning_rate)
    sched = PlateauScheduler(
        learning_rate=config.learning_rate,
        factor=config.plateau_factor,
        patience=config.plateau_patience,
    )
    val_labels = [class_vocab.id_of(instances[i].label) for i in split.validation]

    reports = []
    best_f1 = -1.0
    # an untrained bundle predicts the uniform distribution
    best_params = (
        zeros_like_params(model.params) if config.epochs == 0
        else copy.deepcopy(model.params)
    )
    best_epoch = 0
    stale = 0
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        sample_rng = _epoch_rng(seed, epoch, 0)
        drop_rng = _epoch_rng(seed, epoch, 1)
        order = _epoch_rng(seed, epoch, 2).permutation(len(split.train))
        losses = []
        diverged = False
        for start in range(0, len(order), config.batch_size):
            chunk = [split.train[j] for j in order[start : start + config.batch_size]]
            if config.mode == "single":
                samples = [augment.sample_single(instances[i], sample_rng, source=i) for i in chunk]
            else:
                samples = [
                    augment.sample_multi(instances[i], config.r, config.multi_mode,
                                         sample_rng, source=i)
                    for i in chunk
                ]
            batch = make_batch(samples, [scaled[i] for i in chunk], config, vocab)
            labels = np.asarray([class_vocab.id_of(instances[i].label) for i in chunk])
            probs, cache = model.forward(batch, train_mode=True, dropout_rng=drop_rng)
            loss, dlogits = cross_entropy_batch(probs, labels, class_weights)
            if not np.isfinite(loss):
                diverged = True
                break
            losses.append(loss)
            grads = model.backward(cache, dlogits)
            adam_step(model.params, grads, opt)
        if diverged:
            model.params = copy.deepcopy(best_params)
            break

        val_pred = _predict_labels(
            model, instances, list(split.validation), scaled, vocab, config,
            _epoch_rng(seed, epoch, 3),
        )
        val_f1 = support_weighted_f1(val_labels, val_pred, len(class_vocab))
        val_acc = accuracy(val_labels, val_pred)
        opt.learning_rate = sched.step(val_f1)
        report = EpochReport(
            epoch=epoch,
            train_loss=float(np.mean(losses)) if losses else 0.0,
            val_accuracy=val_acc,
            val_f1=val_f1,
            learning_rate=opt.learning_rate,
            wall_time_s=time.perf_counter() - t0,
        )
        reports.append(report)
        if log_callback is not None:
            log_callback(report)
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_params = copy.deepcopy(model.params)
            best_epoch = epoch
            stale = 0
        else:
            if val_f1 == best_f1:
                # among equal-F1 epochs keep the latest (lower train loss)
                best_params = copy.deepcopy(model.params)
                best_epoch = epoch
            stale += 1
            if stale >= config.early_stop_patience:
                break

    bundle = ModelBundle(
        arch=arch,
        params=best_params,
        vocab=vocab,
        scaler=scaler,
        class_vocab=class_vocab,
        training=config,
        metadata={
            "seed": seed,
            "epochs_run": len(reports),
            "best_epoch": best_epoch,
            "best_val_f1": max(best_f1, 0.0),
        },
    )
    return bundle, reports
