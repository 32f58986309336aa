"""Classification metrics: ROC/AUC, confusion-matrix scores, F1 threshold search."""

import math

import numpy as np

from .errors import ContractError


def _check_binary(labels):
    labels = np.asarray(labels).astype(int)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise ContractError("metric needs both classes present")
    return labels


def roc_auc(scores, labels):
    """Mann-Whitney AUC (ties count one half) and the ROC curve.

    The curve sweeps every distinct score as a threshold, from (0, 0) to (1, 1).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n_pos = labels.sum()
    n_neg = len(labels) - n_pos

    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    distinct = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps = np.cumsum(y)[distinct]
    fps = (distinct + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    # trapezoids credit tied (pos, neg) pairs one half
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])) / 2.0)
    return auc, list(zip(fpr.tolist(), tpr.tolist()))


def confusion(scores, labels, threshold):
    pred = np.asarray(scores, dtype=np.float64) >= threshold
    y = np.asarray(labels).astype(bool)
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    tn = int(np.sum(~pred & ~y))
    return tp, tn, fp, fn


def metrics_from_confusion(tp, tn, fp, fn):
    n = tp + tn + fp + fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom else 0.0
    return {
        "accuracy": (tp + tn) / n if n else 0.0,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "mcc": mcc,
    }


def threshold_metrics(scores, labels, threshold):
    """Accuracy, precision, recall, F1 and MCC when predicting ``score >= threshold``."""
    return metrics_from_confusion(*confusion(scores, labels, threshold))


def candidate_thresholds(scores):
    u = np.unique(np.asarray(scores, dtype=np.float64))
    mids = (u[1:] + u[:-1]) / 2.0
    return np.unique(np.r_[0.0, mids, 1.0])


def best_f1_threshold(scores, labels):
    """Threshold maximising F1 over {0, 1} and midpoints between distinct scores.

    Ties go to the smallest threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    thr = candidate_thresholds(scores)
    # vectorised sweep: positives predicted at threshold t are scores >= t
    s_sorted = np.sort(scores)
    pos_sorted = np.sort(scores[labels == 1])
    n_pred = len(s_sorted) - np.searchsorted(s_sorted, thr, side="left")
    tp = len(pos_sorted) - np.searchsorted(pos_sorted, thr, side="left")
    fn = len(pos_sorted) - tp
    fp = n_pred - tp
    denom = 2 * tp + fp + fn
    f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    return float(thr[int(np.argmax(f1))])


def objective_histogram(scores, labels, objectives_kg, bin_edges, threshold=0.5):
    """Per-bin shares of correct, wrongly-classified successes and failures.

    Bins are half-open ``[lo, hi)`` except the last, which is closed.
    Returns a list of dicts; empty bins have all shares 0 and ``empty=True``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    obj = np.asarray(objectives_kg, dtype=np.float64)
    edges = np.asarray(bin_edges, dtype=np.float64)
    pred = scores >= threshold
    rows = []
    for b in range(len(edges) - 1):
        lo, hi = edges[b], edges[b + 1]
        last = b == len(edges) - 2
        inside = (obj >= lo) & ((obj <= hi) if last else (obj < hi))
        n = int(inside.sum())
        row = {"bin_lo": float(lo), "bin_hi": float(hi), "n": n, "empty": n == 0}
        if n:
            row["correct"] = float(np.sum(inside & (pred == y)) / n)
            row["wrong_successful"] = float(np.sum(inside & y & ~pred) / n)
            row["wrong_failed"] = float(np.sum(inside & ~y & pred) / n)
        else:
            row["correct"] = row["wrong_successful"] = row["wrong_failed"] = 0.0
        rows.append(row)
    return rows
