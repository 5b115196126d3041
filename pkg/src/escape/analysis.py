"""Workspace: aligned matrices, trained head, and concept helpers for a bundle.

The workspace is the immutable per-bundle preparation shared by the CLI
and the service: normalizer fitted on the train split, instance/segment
matrices aligned with it, and a head trained on the aligned train split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import alignment, association, head as head_mod
from .bundle import Concept, DatasetBundle


@dataclass(frozen=True)
class Workspace:
    bundle: DatasetBundle
    seed: int
    head_config: head_mod.HeadConfig
    head_kind: str
    exclusivity_weight: float
    uu_threshold: float
    train_idx: np.ndarray
    test_idx: np.ndarray
    normalizer: alignment.Normalizer
    aligned_train: np.ndarray
    aligned_test: np.ndarray
    aligned_segments: np.ndarray
    head: head_mod.HeadModel

    @property
    def train_ids(self) -> tuple[str, ...]:
        return tuple(self.bundle.instances[i].id for i in self.train_idx)

    @property
    def test_ids(self) -> tuple[str, ...]:
        return tuple(self.bundle.instances[i].id for i in self.test_idx)

    @property
    def train_labels(self) -> np.ndarray:
        return self.bundle.labels[self.train_idx]

    @property
    def test_labels(self) -> np.ndarray:
        return self.bundle.labels[self.test_idx]

    def concept_from_segments(
        self, concept_id: str, name: str, segment_ids: Sequence[str]
    ) -> Concept:
        """Build a concept as the centroid of the named aligned segments."""
        missing = [s for s in segment_ids if s not in self.bundle.segment_index]
        if missing:
            raise KeyError(f"unknown segment id {missing[0]!r}")
        rows = [self.bundle.segment_index[s] for s in segment_ids]
        vector = alignment.concept_vector(rows, self.aligned_segments)
        return Concept(
            id=concept_id, name=name, segment_ids=tuple(segment_ids), vector=vector
        )

    def train_table(
        self, concepts: Sequence[Concept], matrix: np.ndarray | None = None
    ) -> association.AssociationTable:
        m = self.aligned_train if matrix is None else matrix
        return association.build_table(m, self.train_ids, concepts, self.exclusivity_weight)

    def test_table(self, concepts: Sequence[Concept]) -> association.AssociationTable:
        return association.build_table(
            self.aligned_test, self.test_ids, concepts, self.exclusivity_weight
        )


def prepare(
    bundle: DatasetBundle,
    seed: int,
    head_config: head_mod.HeadConfig = head_mod.HeadConfig(),
    head_kind: str = "linear",
    exclusivity_weight: float = association.DEFAULT_EXCLUSIVITY_WEIGHT,
    uu_threshold: float = head_mod.DEFAULT_UU_THRESHOLD,
) -> Workspace:
    """Align a bundle and train its head; deterministic given the seed."""
    train_idx = bundle.split_indices("train")
    test_idx = bundle.split_indices("test")
    if train_idx.size < 2:
        raise ValueError("bundle needs at least two train instances")
    norm = alignment.fit_normalizer(bundle.instance_matrix[train_idx])
    aligned_all = alignment.normalize_instances(bundle.instance_matrix, norm)
    aligned_train = aligned_all[train_idx]
    aligned_test = aligned_all[test_idx]
    aligned_segments = alignment.project_segments(bundle.segment_matrix, norm)
    trained = head_mod.train_head(
        aligned_train, bundle.labels[train_idx], head_config, seed=seed, kind=head_kind
    )
    return Workspace(
        bundle=bundle,
        seed=seed,
        head_config=head_config,
        head_kind=head_kind,
        exclusivity_weight=exclusivity_weight,
        uu_threshold=uu_threshold,
        train_idx=train_idx,
        test_idx=test_idx,
        normalizer=norm,
        aligned_train=aligned_train,
        aligned_test=aligned_test,
        aligned_segments=aligned_segments,
        head=trained,
    )


def build_concepts(
    ws: Workspace, named_groups: Sequence[tuple[str, Sequence[str]]]
) -> list[Concept]:
    """Materialize concepts c0, c1, ... from (name, segment_ids) pairs."""
    return [
        ws.concept_from_segments(f"c{i}", name, seg_ids)
        for i, (name, seg_ids) in enumerate(named_groups)
    ]
