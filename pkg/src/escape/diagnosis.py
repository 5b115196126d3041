"""Confusion analytics, unknown-unknown accounting, 2D projection, k-NN.

An unknown-unknown is a misclassification made with high confidence,
operationalized as Brier score at or above a threshold (default 0.75).
The 2D projection is a deterministic PCA (precomputed coordinates from
the bundle are accepted as an alternative).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bundle import ClassPair, ConfusionCase, DatasetBundle
from .head import DEFAULT_UU_THRESHOLD, BatchPrediction

BRIER_HIST_BINS = 20
DEFAULT_K_INSTANCES = 5
DEFAULT_K_SEGMENTS = 10


@dataclass(frozen=True)
class ConfusionSummary:
    matrix: np.ndarray  # K x K counts, rows = true class, cols = predicted
    misclassified_per_class: np.ndarray  # K, row sums minus diagonal
    uu_per_class: np.ndarray  # K
    uu_matrix: np.ndarray  # K x K
    brier_hist: np.ndarray  # BRIER_HIST_BINS counts over [0, 1]
    uu_threshold: float

    @property
    def n(self) -> int:
        return int(self.matrix.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.matrix) / self.matrix.sum())


def confusion_summary(
    predictions: BatchPrediction,
    labels: Sequence[int],
    uu_threshold: float = DEFAULT_UU_THRESHOLD,
) -> ConfusionSummary:
    """Count confusion cells, per-class errors, and unknown-unknowns."""
    y = np.asarray(labels, dtype=np.int64)
    if predictions.n != len(y):
        raise ValueError("predictions and labels have different lengths")
    if predictions.brier is None:
        raise ValueError("predictions must carry Brier scores (predict with labels)")
    k = predictions.probs.shape[1]
    pred = predictions.predicted
    matrix = np.zeros((k, k), dtype=np.int64)
    np.add.at(matrix, (y, pred), 1)
    is_uu = (pred != y) & (predictions.brier >= uu_threshold)
    uu_matrix = np.zeros((k, k), dtype=np.int64)
    np.add.at(uu_matrix, (y[is_uu], pred[is_uu]), 1)
    hist, _ = np.histogram(predictions.brier, bins=BRIER_HIST_BINS, range=(0.0, 1.0))
    return ConfusionSummary(
        matrix=matrix,
        misclassified_per_class=matrix.sum(axis=1) - np.diag(matrix),
        uu_per_class=uu_matrix.sum(axis=1),
        uu_matrix=uu_matrix,
        brier_hist=hist.astype(np.int64),
        uu_threshold=float(uu_threshold),
    )


def pair_subset(
    labels: Sequence[int],
    predictions: BatchPrediction,
    pair: ClassPair,
) -> tuple[np.ndarray, list[ConfusionCase]]:
    """Indices of instances whose true label is in the pair, with cases.

    The confusion case comes from the prediction restricted to the pair:
    a prediction outside it is mapped to whichever pair class has the
    higher probability (the negative class on an exact tie).
    """
    y = np.asarray(labels, dtype=np.int64)
    mask = (y == pair.negative) | (y == pair.positive)
    indices = np.flatnonzero(mask)
    cases: list[ConfusionCase] = []
    for i in indices:
        pred = int(predictions.predicted[i])
        if pred not in (pair.negative, pair.positive):
            p_pos = predictions.probs[i, pair.positive]
            p_neg = predictions.probs[i, pair.negative]
            pred = pair.positive if p_pos > p_neg else pair.negative
        true_pos = y[i] == pair.positive
        pred_pos = pred == pair.positive
        if true_pos:
            cases.append(ConfusionCase.TP if pred_pos else ConfusionCase.FN)
        else:
            cases.append(ConfusionCase.FP if pred_pos else ConfusionCase.TN)
    return indices, cases


def project_2d(
    matrix: np.ndarray,
    method: str = "pca",
    bundle: Optional[DatasetBundle] = None,
    rows: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Project rows to 2D, either by deterministic PCA or from the bundle.

    PCA centers the rows and takes the top-2 eigenvectors of the
    covariance, each flipped so its first nonzero component is positive.
    ``precomputed`` pulls coords2d for ``rows`` out of the bundle and
    fails if any are absent.
    """
    if method == "pca":
        x = np.asarray(matrix, dtype=np.float64)
        if x.shape[0] < 2:
            raise ValueError("pca projection requires at least 2 rows")
        centered = x - x.mean(axis=0)
        cov = centered.T @ centered / x.shape[0]
        eigvals, eigvecs = np.linalg.eigh(cov)
        components = eigvecs[:, ::-1][:, :2].T  # descending eigenvalue order
        for i in range(components.shape[0]):
            nz = np.flatnonzero(np.abs(components[i]) > 1e-12)
            if nz.size and components[i, nz[0]] < 0:
                components[i] = -components[i]
        return centered @ components.T
    if method == "precomputed":
        if bundle is None or rows is None:
            raise ValueError("precomputed projection needs a bundle and row indices")
        coords = np.empty((len(rows), 2), dtype=np.float64)
        for out_i, i in enumerate(rows):
            ins = bundle.instances[i]
            if ins.coords2d is None:
                raise ValueError(f"instance {ins.id!r} has no precomputed coords2d")
            coords[out_i] = ins.coords2d
        return coords
    raise ValueError(f"unknown projection method {method!r}")


def pca_spectrum(matrix: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of the row covariance (for variance checks)."""
    x = np.asarray(matrix, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    return np.linalg.eigvalsh(cov)[::-1]


def knn(
    matrix: np.ndarray,
    ids: Sequence[str],
    k: int,
    query_id: Optional[str] = None,
    query_vector: Optional[np.ndarray] = None,
) -> list[str]:
    """The k nearest ids by Euclidean distance, ascending; ties by id.

    Exactly one of query_id / query_vector must be given. When querying
    by id, that member is excluded from its own neighborhood.
    """
    if (query_id is None) == (query_vector is None):
        raise ValueError("provide exactly one of query_id or query_vector")
    x = np.asarray(matrix, dtype=np.float64)
    ids = list(ids)
    if query_id is not None:
        try:
            qi = ids.index(query_id)
        except ValueError:
            raise ValueError(f"unknown query id {query_id!r}") from None
        q = x[qi]
        candidates = [i for i in range(len(ids)) if i != qi]
    else:
        q = np.asarray(query_vector, dtype=np.float64)
        candidates = list(range(len(ids)))
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(candidates):
        raise ValueError(f"k={k} exceeds the population of {len(candidates)}")
    dists = np.linalg.norm(x[candidates] - q, axis=1)
    order = sorted(range(len(candidates)), key=lambda j: (dists[j], ids[candidates[j]]))
    return [ids[candidates[j]] for j in order[:k]]
