"""Ridge-regression encoding benchmark scored by predictive r^2.

Compares activation patterns from the canonical-HRF GLM against those
from the rank-one model: ridge models are trained fold-wise to predict
voxel activations from stimulus features, and per-voxel held-out scores
are compared with a one-sided Wilcoxon test.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateInputError,
    InsufficientDataError,
    RankDeficiencyError,
)
from .stats import TestResult, wilcoxon_signed_rank

#: Default ridge penalty grid for inner cross-validation.
LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class EncodingDataset:
    """Per-stimulus features, activations and session fold labels."""

    features: np.ndarray
    activations: np.ndarray
    fold_ids: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        activations = np.asarray(self.activations, dtype=float)
        fold_ids = np.asarray(self.fold_ids)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "activations", activations)
        object.__setattr__(self, "fold_ids", fold_ids)
        if not (features.shape[0] == activations.shape[0] == fold_ids.shape[0]):
            raise ValueError("features, activations and fold_ids disagree on rows")
        if np.unique(fold_ids).size < 2:
            raise ValueError("need at least 2 folds")


@dataclass(frozen=True)
class EncodingResult:
    """Paired per-voxel scores for the selected voxels plus the test."""

    voxel_ids: np.ndarray
    score_canonical: np.ndarray
    score_rank1: np.ndarray
    test: Optional[TestResult]
    note: str = ""


def ridge_fit(X, Y, lam):
    """Ridge regression weights ``(X^T X + lam I)^{-1} X^T Y``.

    Multi-target: all columns of Y share one factorization.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if lam < 0:
        raise ValueError("ridge penalty must be >= 0")
    if lam == 0 and np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficiencyError(
            "lambda = 0 requires a full-column-rank feature matrix"
        )
    f = X.shape[1]
    A = X.T @ X + lam * np.eye(f)
    return scipy.linalg.solve(A, X.T @ Y, assume_a="pos")


def predictive_r2(y_true, y_pred):
    """1 minus squared error normalized by the population variance of
    ``y_true``; may be negative."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("length mismatch between truth and prediction")
    n = y_true.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    var = y_true.var()
    if var == 0:
        raise DegenerateInputError("zero-variance target")
    err = y_true - y_pred
    return 1.0 - float(err @ err) / (n * var)


def _pick_lambda(X, Y, fold_ids):
    """Inner leave-one-fold-out selection over the fixed penalty grid,
    by mean predictive r^2 across voxels and folds."""
    folds = np.unique(fold_ids)
    best_lam, best_score = LAMBDA_GRID[0], -np.inf
    for lam in LAMBDA_GRID:
        scores = []
        for f in folds:
            test = fold_ids == f
            W = ridge_fit(X[~test], Y[~test], lam)
            pred = X[test] @ W
            for v in range(Y.shape[1]):
                if Y[test, v].var() > 0:
                    scores.append(predictive_r2(Y[test, v], pred[:, v]))
        score = np.mean(scores) if scores else -np.inf
        if score > best_score:
            best_lam, best_score = lam, score
    return best_lam


def _crossval_scores(dataset, lam):
    """Leave-one-fold-out predictive r^2 per voxel, averaged over folds."""
    X, Y, fold_ids = dataset.features, dataset.activations, dataset.fold_ids
    folds = np.unique(fold_ids)
    v = Y.shape[1]
    scores = np.zeros((folds.size, v))
    for i, f in enumerate(folds):
        test = fold_ids == f
        train = ~test
        use_lam = lam if lam is not None else _pick_lambda(
            X[train], Y[train], fold_ids[train]
        )
        W = ridge_fit(X[train], Y[train], use_lam)
        pred = X[test] @ W
        for j in range(v):
            scores[i, j] = predictive_r2(Y[test, j], pred[:, j])
    return scores.mean(axis=0)


def encoding_benchmark(dataset_canonical, dataset_rank1, lam=None, top_k=100):
    """Paired encoding comparison between the two activation pipelines.

    Voxels are selected by the canonical pipeline's score only (so
    selection cannot favor the rank-one arm); the returned test is a
    one-sided Wilcoxon for rank-one scores exceeding canonical ones.
    ``lam=None`` selects the penalty on the training folds from
    ``LAMBDA_GRID``.
    """
    if dataset_canonical.activations.shape != dataset_rank1.activations.shape:
        raise ValueError("datasets disagree on the voxel set")
    if not np.array_equal(dataset_canonical.fold_ids, dataset_rank1.fold_ids):
        raise ValueError("datasets disagree on fold labels")

    scores_c = _crossval_scores(dataset_canonical, lam)
    scores_r = _crossval_scores(dataset_rank1, lam)

    order = np.argsort(scores_c)[::-1]
    keep = order[: min(top_k, order.size)]
    keep = np.sort(keep)
    sc, sr = scores_c[keep], scores_r[keep]

    try:
        test = wilcoxon_signed_rank(sr, sc, alternative="greater")
        note = ""
    except InsufficientDataError:
        test = None
        note = "no difference"
    return EncodingResult(
        voxel_ids=keep, score_canonical=sc, score_rank1=sr, test=test, note=note
    )


def write_scatter_csv(path, result):
    """Write paired scores as ``voxel_id,score_canonical,score_rank1``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["voxel_id", "score_canonical", "score_rank1"])
        for vid, sc, sr in zip(
            result.voxel_ids, result.score_canonical, result.score_rank1
        ):
            writer.writerow([int(vid), repr(float(sc)), repr(float(sr))])
