"""Orthogonal-projection debiasing of concept-associated training instances.

Debiasing rejects the concept direction from the most concept-associated
training activations, then measures what fraction of the between-class
disparity remains as more instances are treated. The remaining-bias curve
starts at 1.0 (nothing debiased) and decreases; a tolerance parameter
trades instance count against remaining bias to recommend an operating
point, and an optional evaluation retrains the head to compare accuracy
before and after.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import association, head as head_mod
from .analysis import Workspace
from .bundle import ClassPair, Concept

DEFAULT_GRID = (0, 25, 50, 100, 200, 400)
DEFAULT_SUBGROUP_SIZE = 50


def debias_vector(v_i: np.ndarray, v_c: np.ndarray) -> np.ndarray:
    """Reject the concept direction: v - (v.c / c.c) c, orthogonal to c."""
    v = np.asarray(v_i, dtype=np.float64)
    c = np.asarray(v_c, dtype=np.float64)
    cc = float(c @ c)
    if cc <= 1e-24:
        raise ValueError("cannot debias against a zero-norm concept vector")
    return v - (v @ c) / cc * c


def debias_rows(matrix: np.ndarray, rows: Sequence[int], v_c: np.ndarray) -> np.ndarray:
    """Copy of the matrix with the listed rows orthogonalized against v_c."""
    out = np.array(matrix, dtype=np.float64, copy=True)
    if len(rows) == 0:
        return out
    c = np.asarray(v_c, dtype=np.float64)
    cc = float(c @ c)
    if cc <= 1e-24:
        raise ValueError("cannot debias against a zero-norm concept vector")
    idx = np.asarray(list(rows), dtype=np.int64)
    out[idx] -= np.outer(out[idx] @ c / cc, c)
    return out


def select_candidates(table: association.AssociationTable, concept_id: str) -> list[str]:
    """Instance ids of the table's population in combined-ranking order."""
    order = table.combined_order(concept_id)
    return [table.instance_ids[i] for i in order]


def remaining_bias_ratio(
    disp_before: float, disp_after: float, one_minus_change: bool = False
) -> float:
    """Fraction of the pre-debias disparity still present.

    The default after/before form starts at 1.0 and falls toward 0 at full
    mitigation. ``one_minus_change`` switches to 1 - (after-before)/before,
    which instead rises to 2.0 at full mitigation; it is kept only for
    comparability and is not used by the curve.
    """
    if abs(disp_before) <= 1e-9:
        raise ValueError("remaining-bias ratio undefined: pre-debias disparity is near zero")
    if one_minus_change:
        return 1.0 - (disp_after - disp_before) / disp_before
    return disp_after / disp_before


@dataclass(frozen=True)
class DebiasCurve:
    concept_id: str
    grid: tuple[int, ...]
    rbr: tuple[float, ...]
    disparity_before: float
    disparity_after: tuple[float, ...]
    n_candidates: int
    accuracy_before: Optional[float] = None
    accuracy_after: Optional[tuple[float, ...]] = None
    subgroup_before: Optional[float] = None
    subgroup_after: Optional[tuple[float, ...]] = None


def default_grid(n_candidates: int) -> tuple[int, ...]:
    return tuple(n for n in DEFAULT_GRID if n <= n_candidates)


def recommend_n(curve: DebiasCurve, tolerance: float) -> int:
    """Grid point minimizing (1-t) * n/N_max + t * rbr(n); ties to smallest n.

    Tolerance 0 cares only about the instance budget (always 0); tolerance
    1 cares only about remaining bias.
    """
    if not 0.0 <= tolerance <= 1.0:
        raise ValueError("tolerance must be in [0, 1]")
    if not curve.grid:
        raise ValueError("empty curve")
    n_max = max(curve.grid)
    best_n = curve.grid[0]
    best_cost = None
    for n, r in zip(curve.grid, curve.rbr):
        frac = n / n_max if n_max > 0 else 0.0
        cost = (1.0 - tolerance) * frac + tolerance * r
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_n = n
    return int(best_n)


def _pair_population(labels: np.ndarray, pair: ClassPair) -> np.ndarray:
    return np.flatnonzero((labels == pair.negative) | (labels == pair.positive))


def _subgroup_indices(
    ws: Workspace, concepts: Sequence[Concept], concept_id: str, q: int
) -> np.ndarray:
    """Row indices (into the test split) of the top-q concept-associated tests."""
    table = ws.test_table(concepts)
    order = table.combined_order(concept_id)
    return order[: min(q, len(order))]


def _accuracy(pred: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(pred == labels))


def debias_curve(
    ws: Workspace,
    concepts: Sequence[Concept],
    concept_id: str,
    pair: ClassPair,
    train_matrix: Optional[np.ndarray] = None,
    grid: Optional[Sequence[int]] = None,
    evaluate: bool = False,
    subgroup_q: int = DEFAULT_SUBGROUP_SIZE,
    candidate_ids: Optional[Sequence[str]] = None,
) -> DebiasCurve:
    """Remaining-bias ratio (and optional accuracy) per debiased-count.

    For each grid point n the top-n candidates are debiased on a copy of
    the train activations, the full association pipeline is re-run against
    the unchanged concept set, and the disparity is recomputed. With
    ``evaluate`` the head is also retrained per point (same
    hyperparameters and seed) and test accuracy is recorded overall and on
    the fixed concept-associated test subgroup. ``candidate_ids``
    overrides the combined-ranking candidate order (used for the random
    control).
    """
    concept = next(c for c in concepts if c.id == concept_id)
    matrix = ws.aligned_train if train_matrix is None else np.asarray(train_matrix)
    table = ws.train_table(concepts, matrix)
    if candidate_ids is None:
        candidate_ids = select_candidates(table, concept_id)
    if len(candidate_ids) == 0:
        raise ValueError("no debias candidates in the train split")
    grid_t = tuple(grid) if grid is not None else default_grid(len(candidate_ids))
    if not grid_t or grid_t[0] != 0 or list(grid_t) != sorted(grid_t):
        raise ValueError("grid must be sorted and start at 0")
    if grid_t[-1] > len(candidate_ids):
        raise ValueError("grid exceeds the number of candidates")

    train_ids = ws.train_ids
    row_of = {iid: i for i, iid in enumerate(train_ids)}
    candidate_rows = [row_of[iid] for iid in candidate_ids]
    labels = ws.train_labels
    population = _pair_population(labels, pair)
    col = table.concept_column(concept_id)
    disp_before = association.between_class_disparity(
        table.frex[:, col], labels, pair, population
    )
    if abs(disp_before) <= 1e-9:
        raise ValueError("pre-debias disparity is near zero; nothing to mitigate")

    if evaluate:
        subgroup = _subgroup_indices(ws, concepts, concept_id, subgroup_q)
        test_labels = ws.test_labels
        head_before = head_mod.train_head(
            matrix, labels, ws.head_config, seed=ws.seed, kind=ws.head_kind
        )
        pred_before = head_mod.predict_batch(head_before, ws.aligned_test).predicted
        acc_before = _accuracy(pred_before, test_labels)
        sub_before = _accuracy(pred_before[subgroup], test_labels[subgroup])
        acc_after: list[float] = []
        sub_after: list[float] = []

    rbr: list[float] = []
    disp_after: list[float] = []
    for n in grid_t:
        modified = debias_rows(matrix, candidate_rows[:n], concept.vector)
        table_n = ws.train_table(concepts, modified)
        d_n = association.between_class_disparity(
            table_n.frex[:, col], labels, pair, population
        )
        disp_after.append(d_n)
        rbr.append(remaining_bias_ratio(disp_before, d_n))
        if evaluate:
            head_n = head_mod.train_head(
                modified, labels, ws.head_config, seed=ws.seed, kind=ws.head_kind
            )
            pred_n = head_mod.predict_batch(head_n, ws.aligned_test).predicted
            acc_after.append(_accuracy(pred_n, test_labels))
            sub_after.append(_accuracy(pred_n[subgroup], test_labels[subgroup]))

    return DebiasCurve(
        concept_id=concept_id,
        grid=grid_t,
        rbr=tuple(rbr),
        disparity_before=disp_before,
        disparity_after=tuple(disp_after),
        n_candidates=len(candidate_ids),
        accuracy_before=acc_before if evaluate else None,
        accuracy_after=tuple(acc_after) if evaluate else None,
        subgroup_before=sub_before if evaluate else None,
        subgroup_after=tuple(sub_after) if evaluate else None,
    )


@dataclass(frozen=True)
class DebiasEvaluation:
    concept_id: str
    n: int
    control: Optional[str]
    acc_before: float
    acc_after: float
    subgroup_before: float
    subgroup_after: float
    disparity_before: float
    disparity_after: float
    pct_bias_mitigated: float


def evaluate_debias(
    ws: Workspace,
    concepts: Sequence[Concept],
    concept_id: str,
    pair: ClassPair,
    n: int,
    train_matrix: Optional[np.ndarray] = None,
    control: Optional[str] = None,
    control_seed: Optional[int] = None,
    subgroup_q: int = DEFAULT_SUBGROUP_SIZE,
) -> DebiasEvaluation:
    """Before/after comparison for one debiased-count.

    Retrains the head on the debiased train activations with the
    workspace's hyperparameters and seed. ``control="random"`` replaces
    the combined-ranking candidates with a seeded uniform sample of train
    instances of the same size.
    """
    matrix = ws.aligned_train if train_matrix is None else np.asarray(train_matrix)
    table = ws.train_table(concepts, matrix)
    candidates = select_candidates(table, concept_id)
    if not 0 <= n <= len(candidates):
        raise ValueError(f"n must be in [0, {len(candidates)}], got {n}")
    if control == "random":
        rng = np.random.Generator(
            np.random.PCG64(ws.seed if control_seed is None else control_seed)
        )
        candidates = [str(x) for x in rng.permutation(np.array(ws.train_ids))[:n]]
    elif control is not None:
        raise ValueError(f"unknown control {control!r}")
    curve = debias_curve(
        ws,
        concepts,
        concept_id,
        pair,
        train_matrix=matrix,
        grid=(0, n) if n > 0 else (0,),
        evaluate=True,
        subgroup_q=subgroup_q,
        candidate_ids=candidates if control == "random" else None,
    )
    return DebiasEvaluation(
        concept_id=concept_id,
        n=n,
        control=control,
        acc_before=curve.accuracy_before,
        acc_after=curve.accuracy_after[-1],
        subgroup_before=curve.subgroup_before,
        subgroup_after=curve.subgroup_after[-1],
        disparity_before=curve.disparity_before,
        disparity_after=curve.disparity_after[-1],
        pct_bias_mitigated=1.0 - curve.rbr[-1],
    )
