"""Subspace alignment: standardize instances, project segments, build concepts.

Instance and segment activations live in misaligned subspaces of the same
layer, which makes cosine similarities between them nearly constant. The
fix is a shared affine transform: standardize the instance space per
dimension, then project segments into that standardized space using the
instance statistics. Concept vectors are centroids of aligned segments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension mean and clamped population standard deviation."""

    mean: np.ndarray
    std: np.ndarray


def fit_normalizer(instance_matrix: np.ndarray) -> Normalizer:
    """Fit per-dimension statistics over instance rows.

    Uses the population standard deviation, clamped below at 1e-8 so dead
    activation dimensions do not produce NaNs downstream. Requires at
    least two rows.
    """
    m = np.asarray(instance_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("fitting a normalizer requires a matrix with at least 2 rows")
    mean = m.mean(axis=0)
    std = np.maximum(m.std(axis=0), STD_FLOOR)
    return Normalizer(mean=mean, std=std)


def normalize_instances(matrix: np.ndarray, norm: Normalizer) -> np.ndarray:
    """Standardize instance rows: (x - mean) / std per dimension."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape[-1] != norm.mean.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix has {m.shape[-1]} columns, normalizer expects {norm.mean.shape[0]}"
        )
    return (m - norm.mean) / norm.std


def project_segments(segment_matrix: np.ndarray, norm: Normalizer) -> np.ndarray:
    """Project segment rows into the standardized instance space.

    Applies the identical affine transform as normalize_instances, always
    with the instance statistics; this is what aligns the two subspaces.
    """
    return normalize_instances(segment_matrix, norm)


def concept_vector(indices: Sequence[int], aligned_segments: np.ndarray) -> np.ndarray:
    """Centroid of the selected aligned segment rows.

    Raises on an empty selection or when the centroid is numerically zero
    (opposite segments cancelling out), since a zero concept direction is
    meaningless for cosine association.
    """
    if len(indices) == 0:
        raise ValueError("concept requires at least one segment")
    # Sorted row order makes the float summation order, and therefore the
    # centroid, independent of how the segment list was permuted.
    centroid = np.asarray(aligned_segments, dtype=np.float64)[sorted(indices)].mean(axis=0)
    if float(np.linalg.norm(centroid)) <= 1e-12:
        raise ValueError("segment centroid has zero norm; concept direction undefined")
    return centroid
