"""Class-weighted mini-batch training."""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as tn
from .data.splits import class_weights
from .errors import ContractError, TrainingError
from .optim import Adam, AdamConfig
from .rng import Rng

log = logging.getLogger(__name__)

P_EPS = 1e-12


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 1024
    adam: AdamConfig = field(default_factory=AdamConfig)
    dropout_p: float = 0.1
    seed: int = 0
    class_weighting: bool = True
    # stop when the epoch loss has not improved for this many epochs; None disables
    early_stopping_patience: int = None

    def __post_init__(self):
        if isinstance(self.adam, dict):
            self.adam = AdamConfig(**self.adam)
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ContractError("dropout_p must lie in [0, 1)")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")

    def to_dict(self):
        return asdict(self)


def weighted_bce(p, y, w_pos=1.0, w_neg=1.0):
    """Per-example class-weighted binary cross-entropy of probabilities ``p``."""
    p = tn.clip(tn.as_tensor(p), P_EPS, 1.0 - P_EPS)
    y = np.asarray(y, dtype=np.float64)
    pos = tn.mul(tn.log(p), w_pos * y)
    neg = tn.mul(tn.log(1.0 - p), w_neg * (1.0 - y))
    return -(pos + neg)


def batch_arrays(dataset, idx):
    seq = np.stack([dataset.seqs[i] for i in idx], axis=1)
    return seq, dataset.statics[idx]


def iter_batches(lengths, batch_size, rng=None):
    """Index batches of equal-length sequences.

    With an rng the examples and the batch order are shuffled; without one
    the order is deterministic (by length, then index).
    """
    lengths = np.asarray(lengths)
    order = rng.permutation(len(lengths)) if rng is not None else np.arange(len(lengths))
    buckets = {}
    for i in order:
        buckets.setdefault(int(lengths[i]), []).append(int(i))
    batches = []
    for T in sorted(buckets):
        b = buckets[T]
        batches += [b[s:s + batch_size] for s in range(0, len(b), batch_size)]
    if rng is not None:
        batches = [batches[i] for i in rng.permutation(len(batches))]
    return batches


def batch_loss(model, dataset, idx, weights, training, rng):
    seq, statics = batch_arrays(dataset, idx)
    p = tn.apply("logistic", model.logits(seq, statics, training, rng))
    losses = weighted_bce(p, dataset.labels[idx], *weights)
    return tn.sum(losses), losses


def train(model, dataset, cfg, on_epoch=None):
    """Train ``model`` in place on a normalised dataset.

    Returns ``(model, history)`` where ``history[e]`` is the weighted mean
    loss over epoch ``e``, i.e. sum(w_i * l_i) / N.
    """
    if len(dataset) == 0:
        raise ContractError("cannot train on an empty dataset")
    weights = class_weights(dataset.labels) if cfg.class_weighting else (1.0, 1.0)
    sample_w = np.where(dataset.labels == 1, weights[0], weights[1])
    model.dropout_p = cfg.dropout_p
    opt = Adam(model.parameters(), cfg.adam)
    rng = Rng(cfg.seed).child("train")
    history = []
    best, stale = math.inf, 0
    for epoch in range(cfg.epochs):
        erng = rng.child(f"epoch{epoch}")
        total = 0.0
        for bi, idx in enumerate(iter_batches(dataset.lengths, cfg.batch_size, erng.child("shuffle"))):
            opt.zero_grad()
            loss_sum, _ = batch_loss(model, dataset, idx, weights, True, erng.child(f"batch{bi}"))
            value = loss_sum.item()
            if not math.isfinite(value):
                raise TrainingError(f"loss diverged in epoch {epoch + 1}", epoch=epoch + 1)
            # mean over the batch, as in the usual per-batch objective
            tn.backward(tn.mul(loss_sum, 1.0 / len(idx)))
            opt.step()
            total += value
        epoch_loss = total / float(sample_w.sum())
        history.append(epoch_loss)
        log.debug("epoch %d loss %.6f", epoch + 1, epoch_loss)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)
        if cfg.early_stopping_patience is not None:
            if epoch_loss < best - 1e-12:
                best, stale = epoch_loss, 0
            else:
                stale += 1
                if stale >= cfg.early_stopping_patience:
                    break
    return model, history


def predict(model, dataset, batch_size=1024):
    """Success probabilities in dataset order (inference mode)."""
    out = np.empty(len(dataset))
    for idx in iter_batches(dataset.lengths, batch_size):
        seq, statics = batch_arrays(dataset, idx)
        out[idx] = model.predict_proba(seq, statics)
    return out
