"""Normalisation, stratified folds and class weights."""

import numpy as np

from ..errors import ContractError
from ..features import NORMALIZED_STATICS, SEQ_FEATURES, STATIC_FEATURES
from ..rng import Rng
from .schema import Dataset, NormStats

STD_FLOOR = 1e-8


def fit_stats(dataset, fit_indices):
    fit_indices = list(fit_indices)
    if not fit_indices:
        raise ContractError("normalisation needs at least one fitting example")
    days = np.concatenate([dataset.seqs[i] for i in fit_indices], axis=0)
    mu = days.mean(axis=0)
    sd = np.maximum(days.std(axis=0), STD_FLOOR)
    mean = {f: float(mu[k]) for k, f in enumerate(SEQ_FEATURES)}
    std = {f: float(sd[k]) for k, f in enumerate(SEQ_FEATURES)}
    st = dataset.statics[fit_indices]
    for f in NORMALIZED_STATICS:
        k = STATIC_FEATURES.index(f)
        mean[f] = float(st[:, k].mean())
        std[f] = float(max(st[:, k].std(), STD_FLOOR))
    return NormStats(mean, std)


def apply_stats(dataset, stats):
    out = Dataset(
        seqs=[stats.normalize_seq(s) for s in dataset.seqs],
        statics=stats.normalize_statics(dataset.statics),
        labels=dataset.labels.copy(),
        user_ids=list(dataset.user_ids),
        objectives_kg=dataset.objectives_kg.copy(),
        stats=stats,
        examples=dataset.examples,
    )
    return out


def normalize(dataset, fit_indices):
    """Z-score every feature using statistics of ``fit_indices`` only.

    Day features are pooled over all days of the fitting examples. Gender is
    left as 0/1.
    """
    stats = fit_stats(dataset, fit_indices)
    return apply_stats(dataset, stats), stats


def stratified_folds(labels, k=10, seed=0):
    """``k`` (train_idx, test_idx) pairs preserving the class ratio.

    Each class is shuffled and dealt round-robin; negatives continue where
    positives stopped so fold sizes differ by at most one.
    """
    labels = np.asarray(labels.labels if isinstance(labels, Dataset) else labels).astype(int)
    k = int(k)
    if k < 2:
        raise ContractError("need at least two folds")
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) < k or len(neg) < k:
        raise ContractError(f"each class needs at least {k} members (have {len(pos)} positive, {len(neg)} negative)")
    rng = Rng(seed).child("folds")
    fold_of = np.empty(len(labels), dtype=np.int64)
    pos = pos[rng.child("pos").permutation(len(pos))]
    neg = neg[rng.child("neg").permutation(len(neg))]
    fold_of[pos] = np.arange(len(pos)) % k
    fold_of[neg] = (np.arange(len(neg)) + len(pos)) % k
    everything = np.arange(len(labels))
    return [(everything[fold_of != f], everything[fold_of == f]) for f in range(k)]


def class_weights(labels):
    """Balanced weights ``N / (2 N_c)``; returns ``(w_pos, w_neg)``."""
    labels = np.asarray(labels).astype(int)
    n = len(labels)
    n_pos = int((labels == 1).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ContractError("class weights need both classes present")
    return n / (2.0 * n_pos), n / (2.0 * n_neg)
