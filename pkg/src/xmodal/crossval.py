"""Stratified k-fold evaluation of an architecture."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .arch import ArchitectureSpec
from .data.splits import normalize, stratified_folds
from .errors import TrainingError
from .metrics import best_f1_threshold, roc_auc, threshold_metrics
from .model import build_model
from .rng import Rng
from .stats import paired_t_test
from .train import predict, train

log = logging.getLogger(__name__)

METRICS = ("accuracy", "precision", "recall", "f1", "mcc")


@dataclass
class FoldReport:
    fold_index: int
    auc: float
    roc_points: list
    threshold_star: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float
    training_history: list
    test_indices: list = field(default_factory=list)
    scores: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


@dataclass
class CVResult:
    name: str
    reports: list
    aggregate: dict
    scores: np.ndarray  # pooled test-fold scores in dataset order
    labels: np.ndarray

    def fold_values(self, metric="auc"):
        return [getattr(r, metric) for r in self.reports]

    def to_dict(self):
        return {
            "name": self.name,
            "aggregate": self.aggregate,
            "folds": [r.to_dict() for r in self.reports],
        }


def run_fold(spec, dataset, fold_index, train_idx, test_idx, cfg):
    """Train a fresh model on one fold and score its test part."""
    norm, stats = normalize(dataset, train_idx)
    rng = Rng(cfg.seed).child(f"fold{fold_index}")
    model = build_model(spec, rng.child("init"), cfg.dropout_p)
    fold_cfg = type(cfg)(**{**cfg.__dict__, "seed": int(rng.child("train").integers(0, 2**63 - 1))})
    try:
        model, history = train(model, norm.subset(train_idx), fold_cfg)
    except TrainingError as exc:
        exc.fold = fold_index
        raise TrainingError(f"fold {fold_index}: {exc}", epoch=exc.epoch, fold=fold_index) from exc
    model.stats = stats.to_dict()
    test = norm.subset(test_idx)
    scores = predict(model, test)
    auc, roc = roc_auc(scores, test.labels)
    theta = best_f1_threshold(scores, test.labels)
    m = threshold_metrics(scores, test.labels, theta)
    return FoldReport(
        fold_index=fold_index,
        auc=auc,
        roc_points=roc,
        threshold_star=theta,
        training_history=list(history),
        test_indices=[int(i) for i in test_idx],
        scores=scores.tolist(),
        **m,
    )


def _run_fold_args(args):
    return run_fold(*args)


def crossvalidate(spec, dataset, k, cfg, name="model", workers=1, folds=None):
    """k-fold CV; normalisation is fitted on each training part only.

    The aggregate holds the mean of every per-fold metric, plus pooled-score
    metrics at a single F1-maximising threshold chosen on all test scores.
    """
    if isinstance(spec, dict):
        spec = ArchitectureSpec.from_dict(spec)
    folds = folds if folds is not None else stratified_folds(dataset.labels, k, cfg.seed)
    jobs = [(spec, dataset, f, tr, te, cfg) for f, (tr, te) in enumerate(folds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_fold_args, jobs))
    else:
        reports = [_run_fold_args(j) for j in jobs]
    reports.sort(key=lambda r: r.fold_index)
    for r in reports:
        log.info("%s fold %d auc %.4f", name, r.fold_index, r.auc)

    pooled = np.full(len(dataset), np.nan)
    for r in reports:
        pooled[r.test_indices] = r.scores
    covered = ~np.isnan(pooled)
    labels = dataset.labels
    agg = {"auc": float(np.mean([r.auc for r in reports]))}
    for m in METRICS:
        agg[m] = float(np.mean([getattr(r, m) for r in reports]))
    agg["threshold_star_mean"] = float(np.mean([r.threshold_star for r in reports]))
    theta = best_f1_threshold(pooled[covered], labels[covered])
    agg["pooled"] = {
        "auc": roc_auc(pooled[covered], labels[covered])[0],
        "threshold_star": theta,
        **threshold_metrics(pooled[covered], labels[covered], theta),
    }
    return CVResult(name=name, reports=reports, aggregate=agg, scores=pooled, labels=labels.copy())


def compare(a, b, metric="auc"):
    """Paired t-test of two CV results over matching folds."""
    return paired_t_test(a.fold_values(metric), b.fold_values(metric))


def mean_roc(reports, grid=None):
    """Vertical average of per-fold ROC curves on a shared FPR grid."""
    grid = np.linspace(0.0, 1.0, 101) if grid is None else np.asarray(grid)
    tprs = []
    for r in reports:
        fpr, tpr = np.array(r.roc_points).T
        # step-wise interpolation; take the upper envelope at repeated fpr
        tprs.append(np.interp(grid, fpr, tpr))
    return grid, np.mean(tprs, axis=0)


def unimodal_scores(dataset, widths, cfg, modalities=None, k=10, holdout=0):
    """Hold-out AUC of a single-modality LSTM for each modality.

    Uses fold ``holdout`` of a stratified ``k``-fold split as the test part.
    The scores are the allocator's input.
    """
    from .arch import lstm_spec
    from .features import MODALITIES

    train_idx, test_idx = stratified_folds(dataset.labels, k, cfg.seed)[holdout]
    norm, _ = normalize(dataset, train_idx)
    scores = {}
    for m in modalities or MODALITIES:
        rng = Rng(cfg.seed).child(f"unimodal-{m}")
        model = build_model(lstm_spec(widths, modalities=[m]), rng.child("init"), cfg.dropout_p)
        train(model, norm.subset(train_idx), cfg)
        test = norm.subset(test_idx)
        scores[m] = roc_auc(predict(model, test), test.labels)[0]
    return scores
