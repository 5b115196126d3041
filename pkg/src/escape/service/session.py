"""Single-bundle analysis session: state, caches, and endpoint logic.

One session owns one bundle, one head, and the user's concept list.
Reads work on an immutable state snapshot; mutations (concept create or
delete, debias apply) are serialized behind a lock and swap in a new
snapshot, so concurrent readers always see a consistent pre-mutation
view. Association tables are cached keyed by the state version and the
concept-set hash, which invalidates them whenever the concept set or the
train matrix changes.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .. import debias as debias_mod
from .. import diagnosis, head as head_mod
from ..analysis import Workspace, prepare
from ..association import AssociationTable, between_class_disparity
from ..bundle import ClassPair, Concept, ConfusionCase, DatasetBundle
from . import schemas


class SessionError(Exception):
    def __init__(self, status: int, error: str, detail: str, entity_id: Optional[str] = None):
        super().__init__(detail)
        self.status = status
        self.error = error
        self.detail = detail
        self.entity_id = entity_id


@dataclass(frozen=True)
class SessionState:
    version: int
    train_matrix: np.ndarray
    head: head_mod.HeadModel
    test_pred: head_mod.BatchPrediction
    pair: Optional[ClassPair]
    concepts: tuple[Concept, ...]
    applied: tuple[tuple[str, int], ...]


class AnalysisSession:
    def __init__(
        self,
        bundle: DatasetBundle,
        seed: int,
        head_config: head_mod.HeadConfig = head_mod.HeadConfig(),
        uu_threshold: float = head_mod.DEFAULT_UU_THRESHOLD,
    ):
        self.ws: Workspace = prepare(
            bundle, seed, head_config=head_config, uu_threshold=uu_threshold
        )
        self.seed = seed
        self._lock = threading.Lock()
        self._concept_counter = 0
        self._table_cache: dict[tuple, AssociationTable] = {}
        test_pred = head_mod.predict_batch(
            self.ws.head, self.ws.aligned_test, self.ws.test_labels
        )
        self._state = SessionState(
            version=0,
            train_matrix=self.ws.aligned_train,
            head=self.ws.head,
            test_pred=test_pred,
            pair=None,
            concepts=(),
            applied=(),
        )

    # -- snapshot helpers -------------------------------------------------

    @property
    def state(self) -> SessionState:
        return self._state

    def _effective_pair(self, state: SessionState) -> ClassPair:
        if state.pair is not None:
            return state.pair
        if len(self.ws.bundle.classes) == 2:
            return ClassPair(negative=0, positive=1)
        raise SessionError(400, "no_pair", "select a class pair first")

    def cache_keys(self) -> list[tuple]:
        return list(self._table_cache.keys())

    def _table(self, state: SessionState, split: str) -> AssociationTable:
        if not state.concepts:
            raise SessionError(400, "no_concepts", "no concepts defined yet")
        key = (state.version, split, tuple(c.id for c in state.concepts))
        table = self._table_cache.get(key)
        if table is None:
            if split == "train":
                table = self.ws.train_table(state.concepts, state.train_matrix)
            else:
                table = self.ws.test_table(state.concepts)
            self._table_cache[key] = table
        return table

    def _concept(self, state: SessionState, concept_id: str) -> Concept:
        for c in state.concepts:
            if c.id == concept_id:
                return c
        raise SessionError(404, "unknown_concept", f"no concept {concept_id!r}", concept_id)

    def _pair_cases(
        self, state: SessionState, pair: ClassPair
    ) -> tuple[np.ndarray, list[ConfusionCase]]:
        return diagnosis.pair_subset(self.ws.test_labels, state.test_pred, pair)

    # -- read endpoints ---------------------------------------------------

    def overview(self) -> schemas.OverviewResponse:
        state = self._state
        summary = diagnosis.confusion_summary(
            state.test_pred, self.ws.test_labels, self.ws.uu_threshold
        )
        wrong = state.test_pred.predicted != self.ws.test_labels
        uu = wrong & (state.test_pred.brier >= self.ws.uu_threshold)
        return schemas.OverviewResponse(
            seed=self.seed,
            n_test=int(len(self.ws.test_idx)),
            accuracy=summary.accuracy,
            classes=list(self.ws.bundle.classes),
            counts=schemas.PerformanceCounts(
                correct=int((~wrong).sum()),
                known_unknowns=int((wrong & ~uu).sum()),
                unknown_unknowns=int(uu.sum()),
            ),
            brier_histogram=[int(x) for x in summary.brier_hist],
            confusion=summary.matrix.tolist(),
            uu_confusion=summary.uu_matrix.tolist(),
            misclassified_per_class=[int(x) for x in summary.misclassified_per_class],
            uu_per_class=[int(x) for x in summary.uu_per_class],
            uu_threshold=self.ws.uu_threshold,
            applied_debias=[
                schemas.AppliedDebias(concept_id=c, n=n) for c, n in state.applied
            ],
        )

    def select_pair(self, negative: int, positive: int) -> schemas.PairResponse:
        k = len(self.ws.bundle.classes)
        if not (0 <= negative < k and 0 <= positive < k) or negative == positive:
            raise SessionError(
                400, "invalid_pair", f"pair ({negative}, {positive}) is not two distinct classes"
            )
        pair = ClassPair(negative=negative, positive=positive)
        with self._lock:
            self._state = replace(self._state, pair=pair)
        return self.instances()

    def instances(
        self,
        cases: Optional[Sequence[str]] = None,
        brier_min: float = 0.0,
        brier_max: float = 1.0,
    ) -> schemas.PairResponse:
        state = self._state
        pair = self._effective_pair(state)
        idx, case_list = self._pair_cases(state, pair)
        coords = diagnosis.project_2d(self.ws.aligned_test[idx])
        wanted = {c.upper() for c in cases} if cases else None
        out = []
        for j, (i, case) in enumerate(zip(idx, case_list)):
            brier = float(state.test_pred.brier[i])
            if wanted is not None and case.value not in wanted:
                continue
            if not brier_min <= brier <= brier_max:  # inclusive bounds
                continue
            ins = self.ws.bundle.instances[self.ws.test_idx[i]]
            out.append(
                schemas.InstancePayload(
                    id=ins.id,
                    label=int(self.ws.test_labels[i]),
                    predicted=int(state.test_pred.predicted[i]),
                    case=case.value,
                    brier=brier,
                    coords=(float(coords[j, 0]), float(coords[j, 1])),
                    image=ins.image_path,
                )
            )
        return schemas.PairResponse(
            seed=self.seed, negative=pair.negative, positive=pair.positive, instances=out
        )

    def neighbors(self, instance_id: str, k: int = diagnosis.DEFAULT_K_INSTANCES) -> schemas.NeighborsResponse:
        ids = list(self.ws.test_ids)
        if instance_id not in ids:
            raise SessionError(
                404, "unknown_instance", f"no test instance {instance_id!r}", instance_id
            )
        try:
            found = diagnosis.knn(self.ws.aligned_test, ids, k, query_id=instance_id)
        except ValueError as exc:
            raise SessionError(400, "bad_k", str(exc)) from exc
        return schemas.NeighborsResponse(seed=self.seed, id=instance_id, k=k, neighbors=found)

    def segment_workspace(self, cases: Sequence[str]) -> schemas.WorkspaceResponse:
        state = self._state
        pair = self._effective_pair(state)
        idx, case_list = self._pair_cases(state, pair)
        wanted = {c.upper() for c in cases} if cases else {c.value for c in ConfusionCase}
        unknown = wanted - {c.value for c in ConfusionCase}
        if unknown:
            raise SessionError(400, "bad_case", f"unknown confusion case {sorted(unknown)[0]!r}")
        case_of_instance: dict[str, str] = {}
        for i, case in zip(idx, case_list):
            if case.value in wanted:
                case_of_instance[self.ws.bundle.instances[self.ws.test_idx[i]].id] = case.value
        seg_rows = [
            (j, seg)
            for j, seg in enumerate(self.ws.bundle.segments)
            if seg.instance_id in case_of_instance
        ]
        segments: list[schemas.SegmentPayload] = []
        if seg_rows:
            rows = [j for j, _ in seg_rows]
            vectors = self.ws.aligned_segments[rows]
            if len(rows) >= 2:
                coords = diagnosis.project_2d(vectors)
            else:
                coords = np.zeros((len(rows), 2))
            seg_ids = [seg.id for _, seg in seg_rows]
            k_group = min(diagnosis.DEFAULT_K_SEGMENTS, len(rows) - 1)
            for j, (_, seg) in enumerate(seg_rows):
                neigh = (
                    diagnosis.knn(vectors, seg_ids, k_group, query_id=seg.id)
                    if k_group >= 1
                    else []
                )
                segments.append(
                    schemas.SegmentPayload(
                        id=seg.id,
                        instance_id=seg.instance_id,
                        case=case_of_instance[seg.instance_id],
                        coords=(float(coords[j, 0]), float(coords[j, 1])),
                        neighbors=neigh,
                        image=seg.image_path,
                    )
                )
        return schemas.WorkspaceResponse(seed=self.seed, cases=sorted(wanted), segments=segments)

    def concept_overview(self) -> schemas.ConceptOverviewResponse:
        state = self._state
        pair = self._effective_pair(state)
        summaries = []
        if state.concepts:
            table = self._table(state, "train")
            labels = self.ws.train_labels
            population = np.flatnonzero(
                (labels == pair.negative) | (labels == pair.positive)
            )
            idx, case_list = self._pair_cases(state, pair)
            fp_rows = [i for i, c in zip(idx, case_list) if c is ConfusionCase.FP]
            fn_rows = [i for i, c in zip(idx, case_list) if c is ConfusionCase.FN]
            for concept in state.concepts:
                col = table.concept_column(concept.id)
                disparity = between_class_disparity(
                    table.frex[:, col], labels, pair, population
                )
                # Influence toward the wrongly predicted side of each error group.
                fp = self._influence(state, fp_rows, concept, k=pair.positive)
                fn = self._influence(state, fn_rows, concept, k=pair.negative)
                summaries.append(
                    schemas.ConceptSummary(
                        id=concept.id,
                        name=concept.name,
                        n_segments=len(concept.segment_ids),
                        disparity=float(disparity),
                        fp=fp,
                        fn=fn,
                    )
                )
        return schemas.ConceptOverviewResponse(
            seed=self.seed, negative=pair.negative, positive=pair.positive, concepts=summaries
        )

    def _influence(
        self, state: SessionState, rows: Sequence[int], concept: Concept, k: int
    ) -> schemas.InfluencePayload:
        if not rows:
            return schemas.InfluencePayload(size=0)
        result = head_mod.concept_influence(
            state.head, self.ws.aligned_test[list(rows)], concept.vector, k
        )
        return schemas.InfluencePayload(
            size=len(rows),
            positive_fraction=result.positive_fraction,
            mean_derivative=result.mean_derivative,
        )

    def concept_detail(self, concept_id: str, top: int = 20) -> schemas.ConceptDetailResponse:
        state = self._state
        pair = self._effective_pair(state)
        concept = self._concept(state, concept_id)
        train_table = self._table(state, "train")
        test_table = self._table(state, "test")
        col = train_table.concept_column(concept_id)
        labels = self.ws.train_labels
        population = np.flatnonzero((labels == pair.negative) | (labels == pair.positive))
        disparity = between_class_disparity(train_table.frex[:, col], labels, pair, population)
        class_assoc = []
        for label in (pair.negative, pair.positive):
            members = np.flatnonzero(labels == label)
            class_assoc.append(
                schemas.ClassAssociation(
                    label=label,
                    class_name=self.ws.bundle.classes[label],
                    total_association=float(train_table.frex[members, col].sum()),
                )
            )
        top_train = [
            schemas.RankedInstance(
                id=train_table.instance_ids[i],
                score=float(train_table.frex[i, col]),
                label=int(labels[i]),
            )
            for i in train_table.combined_order(concept_id)[:top]
        ]
        tcol = test_table.concept_column(concept_id)
        wrong = state.test_pred.predicted != self.ws.test_labels
        top_wrong = []
        for i in test_table.combined_order(concept_id):
            if not wrong[i]:
                continue
            top_wrong.append(
                schemas.RankedInstance(
                    id=test_table.instance_ids[i],
                    score=float(test_table.frex[i, tcol]),
                    label=int(self.ws.test_labels[i]),
                    predicted=int(state.test_pred.predicted[i]),
                    brier=float(state.test_pred.brier[i]),
                )
            )
            if len(top_wrong) >= top:
                break
        return schemas.ConceptDetailResponse(
            seed=self.seed,
            id=concept.id,
            name=concept.name,
            disparity=float(disparity),
            class_associations=class_assoc,
            top_train=top_train,
            top_misclassified_test=top_wrong,
        )

    def curve(self, concept_id: str, evaluate: bool = False) -> schemas.CurveResponse:
        state = self._state
        pair = self._effective_pair(state)
        self._concept(state, concept_id)
        try:
            curve = debias_mod.debias_curve(
                self.ws,
                state.concepts,
                concept_id,
                pair,
                train_matrix=state.train_matrix,
                evaluate=evaluate,
            )
        except ValueError as exc:
            raise SessionError(400, "curve_failed", str(exc), concept_id) from exc
        return schemas.CurveResponse(
            seed=self.seed,
            concept_id=concept_id,
            grid=list(curve.grid),
            rbr=list(curve.rbr),
            disparity_before=curve.disparity_before,
            disparity_after=list(curve.disparity_after),
            n_candidates=curve.n_candidates,
            accuracy_before=curve.accuracy_before,
            accuracy_after=list(curve.accuracy_after) if evaluate else None,
            subgroup_before=curve.subgroup_before,
            subgroup_after=list(curve.subgroup_after) if evaluate else None,
        )

    def recommend(self, concept_id: str, tolerance: float) -> schemas.RecommendResponse:
        if not 0.0 <= tolerance <= 1.0:
            raise SessionError(400, "bad_tolerance", f"tolerance must be in [0, 1], got {tolerance}")
        state = self._state
        pair = self._effective_pair(state)
        self._concept(state, concept_id)
        try:
            curve = debias_mod.debias_curve(
                self.ws, state.concepts, concept_id, pair, train_matrix=state.train_matrix
            )
        except ValueError as exc:
            raise SessionError(400, "curve_failed", str(exc), concept_id) from exc
        return schemas.RecommendResponse(
            seed=self.seed,
            concept_id=concept_id,
            tolerance=tolerance,
            n=debias_mod.recommend_n(curve, tolerance),
        )

    # -- mutations ----------------------------------------------------------

    def create_concept(self, name: str, segment_ids: Sequence[str]) -> schemas.ConceptCreatedResponse:
        if not segment_ids:
            raise SessionError(400, "empty_concept", "a concept needs at least one segment")
        with self._lock:
            state = self._state
            concept_id = f"c{self._concept_counter}"
            try:
                concept = self.ws.concept_from_segments(concept_id, name, segment_ids)
            except KeyError as exc:
                missing = str(exc.args[0])
                raise SessionError(404, "unknown_segment", missing, None) from exc
            except ValueError as exc:
                raise SessionError(400, "bad_concept", str(exc)) from exc
            self._concept_counter += 1
            self._state = replace(state, concepts=state.concepts + (concept,))
        return schemas.ConceptCreatedResponse(
            seed=self.seed,
            id=concept.id,
            name=concept.name,
            n_segments=len(concept.segment_ids),
            vector_norm=float(np.linalg.norm(concept.vector)),
        )

    def delete_concept(self, concept_id: str) -> None:
        with self._lock:
            state = self._state
            kept = tuple(c for c in state.concepts if c.id != concept_id)
            if len(kept) == len(state.concepts):
                raise SessionError(
                    404, "unknown_concept", f"no concept {concept_id!r}", concept_id
                )
            self._state = replace(state, concepts=kept)

    def apply_debias(self, concept_id: str, n: int) -> schemas.ApplyResponse:
        with self._lock:
            state = self._state
            pair = self._effective_pair(state)
            concept = self._concept(state, concept_id)
            try:
                evaluation = debias_mod.evaluate_debias(
                    self.ws, state.concepts, concept_id, pair, n,
                    train_matrix=state.train_matrix,
                )
            except ValueError as exc:
                raise SessionError(400, "bad_debias", str(exc), concept_id) from exc
            table = self.ws.train_table(state.concepts, state.train_matrix)
            candidates = debias_mod.select_candidates(table, concept_id)
            row_of = {iid: i for i, iid in enumerate(self.ws.train_ids)}
            new_matrix = debias_mod.debias_rows(
                state.train_matrix, [row_of[i] for i in candidates[:n]], concept.vector
            )
            new_head = head_mod.train_head(
                new_matrix,
                self.ws.train_labels,
                self.ws.head_config,
                seed=self.ws.seed,
                kind=self.ws.head_kind,
            )
            new_pred = head_mod.predict_batch(new_head, self.ws.aligned_test, self.ws.test_labels)
            self._state = replace(
                state,
                version=state.version + 1,
                train_matrix=new_matrix,
                head=new_head,
                test_pred=new_pred,
                applied=state.applied + ((concept_id, n),),
            )
        summary = (
            f"Debiased {n} training instances most associated with {concept.name!r}: "
            f"between-class disparity moved from {evaluation.disparity_before:.3f} to "
            f"{evaluation.disparity_after:.3f} "
            f"({100 * evaluation.pct_bias_mitigated:.1f}% of the association removed); "
            f"test accuracy {evaluation.acc_before:.3f} -> {evaluation.acc_after:.3f}."
        )
        return schemas.ApplyResponse(
            seed=self.seed,
            concept_id=concept_id,
            n=n,
            disparity_before=evaluation.disparity_before,
            disparity_after=evaluation.disparity_after,
            remaining_bias_ratio=1.0 - evaluation.pct_bias_mitigated,
            pct_bias_mitigated=evaluation.pct_bias_mitigated,
            accuracy_before=evaluation.acc_before,
            accuracy_after=evaluation.acc_after,
            subgroup_before=evaluation.subgroup_before,
            subgroup_after=evaluation.subgroup_after,
            summary=summary,
        )
