"""Concept-association scores: raw cosine, exclusive z-score, combined rank.

For every (instance, concept) pair the table holds the raw cosine
association, the per-instance standardized (exclusive) score, full
per-concept rankings under both views, and their combination through a
weighted harmonic mean of ranking ECDFs. The combined ranking surfaces
instances that are strongly *and* exclusively associated with a concept;
summing combined scores per class yields the between-class disparity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bundle import ClassPair, Concept

DEFAULT_EXCLUSIVITY_WEIGHT = 0.2
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class AssociationTable:
    """Per-(instance, concept) association scores and rankings.

    All matrices are N x C. Ranks run 1..N per concept with 1 the
    strongest; for each concept both rank columns are permutations of
    1..N. ``top_concept`` holds, per instance, the index of its most
    exclusively associated concept.
    """

    instance_ids: tuple[str, ...]
    concept_ids: tuple[str, ...]
    raw: np.ndarray
    z: np.ndarray
    raw_rank: np.ndarray
    ex_rank: np.ndarray
    frex: np.ndarray
    comb_rank: np.ndarray
    top_concept: np.ndarray

    def concept_column(self, concept_id: str) -> int:
        return self.concept_ids.index(concept_id)

    def combined_order(self, concept_id: str) -> np.ndarray:
        """Instance row indices in combined-ranking order (rank 1 first)."""
        c = self.concept_column(concept_id)
        return np.argsort(self.comb_rank[:, c], kind="stable")


def raw_association(v_x: np.ndarray, v_c: np.ndarray) -> float:
    """Cosine similarity between an instance vector and a concept vector."""
    v_x = np.asarray(v_x, dtype=np.float64)
    v_c = np.asarray(v_c, dtype=np.float64)
    nx = float(np.linalg.norm(v_x))
    nc = float(np.linalg.norm(v_c))
    if nx <= _NORM_EPS or nc <= _NORM_EPS:
        raise ValueError("cosine association undefined for zero-norm vectors")
    return float(np.dot(v_x, v_c) / (nx * nc))


def association_matrix(instances: np.ndarray, concepts: Sequence[Concept]) -> np.ndarray:
    """Pairwise cosine matrix between instance rows and concept vectors."""
    if len(concepts) == 0:
        raise ValueError("at least one concept is required")
    x = np.asarray(instances, dtype=np.float64)
    c = np.stack([np.asarray(con.vector, dtype=np.float64) for con in concepts])
    x_norm = np.linalg.norm(x, axis=1)
    c_norm = np.linalg.norm(c, axis=1)
    if np.any(x_norm <= _NORM_EPS):
        bad = int(np.flatnonzero(x_norm <= _NORM_EPS)[0])
        raise ValueError(f"instance row {bad} has zero norm")
    if np.any(c_norm <= _NORM_EPS):
        bad = int(np.flatnonzero(c_norm <= _NORM_EPS)[0])
        raise ValueError(f"concept {concepts[bad].id!r} has a zero-norm vector")
    return (x @ c.T) / np.outer(x_norm, c_norm)


def _id_order(instance_ids: Sequence[str]) -> np.ndarray:
    """Tie-break key: position of each instance in lexicographic id order."""
    order = sorted(range(len(instance_ids)), key=lambda i: instance_ids[i])
    key = np.empty(len(instance_ids), dtype=np.int64)
    key[order] = np.arange(len(instance_ids))
    return key


def _rank_desc(scores: np.ndarray, *tie_keys: np.ndarray) -> np.ndarray:
    """Ranks 1..N by descending score; ties resolved by the given keys."""
    idx = np.lexsort(tuple(reversed(tie_keys)) + (-scores,))
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[idx] = np.arange(1, len(scores) + 1)
    return ranks


def exclusive_rankings(
    assoc: np.ndarray, instance_ids: Sequence[str]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardize associations per instance and rank instances per concept.

    Returns ``(z, top_concept, ex_rank)``. Scores are standardized across
    concepts within each row; rows with a single concept or a degenerate
    spread get z = 0, so their exclusive ranking falls back to raw-score
    order (raw score is the secondary sort key, instance id the final
    one). ``top_concept`` breaks ties toward the lowest concept index.
    """
    a = np.asarray(assoc, dtype=np.float64)
    n, c = a.shape
    if c == 1:
        z = np.zeros_like(a)
    else:
        mean = a.mean(axis=1, keepdims=True)
        std = a.std(axis=1, keepdims=True)
        z = np.where(std < 1e-12, 0.0, (a - mean) / np.where(std < 1e-12, 1.0, std))
    top_concept = np.argmax(z, axis=1).astype(np.int64)  # argmax takes the lowest index on ties
    id_key = _id_order(instance_ids)
    ex_rank = np.empty_like(a, dtype=np.int64)
    for j in range(c):
        ex_rank[:, j] = _rank_desc(z[:, j], -a[:, j], id_key)
    return z, top_concept, ex_rank


def ecdf_from_rank(rank: np.ndarray) -> np.ndarray:
    """Empirical CDF value of each rank: (N - rank + 1) / N, in (0, 1]."""
    rank = np.asarray(rank, dtype=np.float64)
    n = rank.shape[0]
    return (n - rank + 1.0) / n


def frex_combine(
    raw_rank: np.ndarray,
    ex_rank: np.ndarray,
    w: float = DEFAULT_EXCLUSIVITY_WEIGHT,
    tie_key: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Combine the two rankings through a weighted harmonic mean of ECDFs.

    ``w`` is the weight given to exclusivity. Returns the combined scores
    in (0, 1] and the combined ranking (descending score, ties by
    ``tie_key`` then input order).
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"exclusivity weight must be in [0, 1], got {w}")
    raw_rank = np.asarray(raw_rank)
    ex_rank = np.asarray(ex_rank)
    if raw_rank.shape != ex_rank.shape:
        raise ValueError("raw and exclusive rankings must have equal length")
    ecdf_raw = ecdf_from_rank(raw_rank)
    ecdf_ex = ecdf_from_rank(ex_rank)
    frex = 1.0 / (w / ecdf_ex + (1.0 - w) / ecdf_raw)
    if tie_key is None:
        tie_key = np.arange(len(frex), dtype=np.int64)
    comb_rank = _rank_desc(frex, tie_key)
    return frex, comb_rank


def build_table(
    matrix: np.ndarray,
    instance_ids: Sequence[str],
    concepts: Sequence[Concept],
    w: float = DEFAULT_EXCLUSIVITY_WEIGHT,
) -> AssociationTable:
    """Run the full association pipeline over one instance population."""
    raw = association_matrix(matrix, concepts)
    id_key = _id_order(instance_ids)
    z, top_concept, ex_rank = exclusive_rankings(raw, instance_ids)
    n, c = raw.shape
    raw_rank = np.empty_like(ex_rank)
    frex = np.empty_like(raw)
    comb_rank = np.empty_like(ex_rank)
    for j in range(c):
        raw_rank[:, j] = _rank_desc(raw[:, j], id_key)
        frex[:, j], comb_rank[:, j] = frex_combine(raw_rank[:, j], ex_rank[:, j], w, id_key)
    return AssociationTable(
        instance_ids=tuple(instance_ids),
        concept_ids=tuple(con.id for con in concepts),
        raw=raw,
        z=z,
        raw_rank=raw_rank,
        ex_rank=ex_rank,
        frex=frex,
        comb_rank=comb_rank,
        top_concept=top_concept,
    )


def between_class_disparity(
    frex_scores: np.ndarray,
    labels: np.ndarray,
    pair: ClassPair,
    population: Sequence[int],
    mean_based: bool = False,
) -> float:
    """Difference of summed combined scores: positive class minus negative.

    ``population`` lists the row indices to aggregate over; every member's
    label must belong to the pair. A positive result means the concept is
    biased toward the positive class. ``mean_based`` switches the sums to
    class means (off by default: class imbalance is left unnormalized).
    """
    idx = np.asarray(list(population), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("disparity requires a non-empty population")
    labels = np.asarray(labels)
    member_labels = labels[idx]
    if not np.all((member_labels == pair.negative) | (member_labels == pair.positive)):
        raise ValueError("population contains labels outside the class pair")
    scores = np.asarray(frex_scores, dtype=np.float64)[idx]
    pos = scores[member_labels == pair.positive]
    neg = scores[member_labels == pair.negative]
    if mean_based:
        pos_term = float(pos.mean()) if pos.size else 0.0
        neg_term = float(neg.mean()) if neg.size else 0.0
        return pos_term - neg_term
    return float(pos.sum() - neg.sum())
