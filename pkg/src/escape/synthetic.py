"""Deterministic generator of bundles with planted spurious associations.

The generated world is a two-class Gaussian mixture in activation space.
Each configured concept owns a direction orthogonal to the class axes;
instances of class k carry the concept with the configured per-class
training rate (the planted skew), while the test split carries it at a
balanced rate unless overridden. Carrying instances receive the concept
direction added to their activation and emit one matching segment.

Instances and segments additionally live on two different constant
offsets, which keeps the raw instance and segment subspaces misaligned
(near-parallel raw segment clusters) exactly like real layer activations;
the alignment preprocessing is what makes the planted structure visible.

Everything is drawn from one seeded 64-bit PCG64 stream in a fixed order,
so a seed maps to one bundle bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bundle import DatasetBundle, Instance, Segment

RNG_ALGORITHM = "numpy-pcg64"
N_CLASSES = 2


@dataclass(frozen=True)
class ConceptSpec:
    """One planted concept: per-class training carriage rates and strength."""

    name: str
    contamination: tuple[float, float]
    strength: float
    test_contamination: Optional[tuple[float, float]] = None

    def test_rates(self) -> tuple[float, float]:
        # Balanced by default: the configured skew is a training artifact,
        # the test split reflects the unskewed world.
        if self.test_contamination is not None:
            return self.test_contamination
        avg = float(sum(self.contamination)) / len(self.contamination)
        return (avg, avg)


@dataclass(frozen=True)
class PlantConfig:
    seed: int
    dim: int = 64
    n_train_per_class: int = 400
    n_test_per_class: int = 200
    concepts: tuple[ConceptSpec, ...] = (
        ConceptSpec(name="spurious", contamination=(0.3, 0.02), strength=4.0),
    )
    noise_sigma: float = 1.0
    class_sep: float = 2.0
    subspace_offset: float = 12.0
    segment_shift: float = 0.0
    segment_noise: float = 0.25
    background_groups: int = 2


@dataclass(frozen=True)
class GroundTruth:
    """What was planted: memberships, intended bias, and oracle internals."""

    seed: int
    rng_algorithm: str
    memberships: dict[str, tuple[str, ...]]
    biased_class: dict[str, Optional[int]]
    concept_segments: dict[str, tuple[str, ...]]
    background_segments: dict[str, tuple[str, ...]]
    directions: dict[str, np.ndarray]
    class_means: np.ndarray
    instance_offset: np.ndarray
    segment_offset: np.ndarray

    def carriers(self, concept_name: str, ids: Optional[Sequence[str]] = None) -> set[str]:
        """Instance ids carrying the concept, optionally within a population."""
        carrying = {
            iid for iid, names in self.memberships.items() if concept_name in names
        }
        if ids is not None:
            carrying &= set(ids)
        return carrying


def _validate(config: PlantConfig) -> None:
    c = len(config.concepts)
    needed = N_CLASSES + c + 2  # class axes + concept directions + two offsets
    if config.dim < needed:
        raise ValueError(
            f"infeasible config: dim {config.dim} < {needed} "
            f"(2 classes + {c} concepts + 2 offset directions)"
        )
    if config.n_train_per_class < 2 or config.n_test_per_class < 1:
        raise ValueError("infeasible config: too few instances per class")
    for spec in config.concepts:
        rates = spec.contamination + (spec.test_contamination or ())
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError(f"concept {spec.name!r}: contamination rates must be in [0, 1]")
        if spec.strength <= 0:
            raise ValueError(f"concept {spec.name!r}: strength must be positive")
    if config.noise_sigma < 0 or config.segment_noise < 0:
        raise ValueError("noise levels must be non-negative")
    if config.background_groups < 1:
        raise ValueError("at least one background group is required")


def _orthonormal_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Gram-Schmidt over seeded Gaussian draws; rows are orthonormal."""
    raw = rng.standard_normal((count, dim))
    basis = np.empty_like(raw)
    for i in range(count):
        v = raw[i] - basis[:i].T @ (basis[:i] @ raw[i])
        norm = float(np.linalg.norm(v))
        if norm < 1e-9:
            raise ValueError("degenerate direction draw; raise dim or change seed")
        basis[i] = v / norm
    return basis


def generate(config: PlantConfig) -> tuple[DatasetBundle, GroundTruth]:
    """Build a bundle plus its ground truth, fully deterministic per seed."""
    _validate(config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    dim = config.dim
    n_concepts = len(config.concepts)

    basis = _orthonormal_directions(rng, N_CLASSES + n_concepts + 2, dim)
    class_means = (config.class_sep / np.sqrt(2.0)) * basis[:N_CLASSES]
    directions = {
        spec.name: basis[N_CLASSES + i] for i, spec in enumerate(config.concepts)
    }
    instance_offset = config.subspace_offset * basis[N_CLASSES + n_concepts]
    segment_offset = instance_offset + config.segment_shift * basis[N_CLASSES + n_concepts + 1]
    strength_of = {spec.name: spec.strength for spec in config.concepts}

    instances: list[Instance] = []
    vectors: list[np.ndarray] = []
    memberships: dict[str, tuple[str, ...]] = {}
    seg_plan: list[tuple[str, Optional[str], np.ndarray]] = []  # (instance, concept|None, vec)

    def emit_split(split: str, n_per_class: int, prefix: str) -> None:
        total = N_CLASSES * n_per_class
        width = max(4, len(str(total - 1)))
        idx = 0
        for i in range(n_per_class):
            for label in range(N_CLASSES):  # interleave classes so id ties stay class-neutral
                iid = f"{prefix}{idx:0{width}d}"
                carried = []
                vec = instance_offset + class_means[label].copy()
                for spec in config.concepts:
                    rate = (
                        spec.contamination[label]
                        if split == "train"
                        else spec.test_rates()[label]
                    )
                    if rng.random() < rate:
                        carried.append(spec.name)
                        vec = vec + spec.strength * directions[spec.name]
                vec = vec + config.noise_sigma * rng.standard_normal(dim)
                instances.append(Instance(id=iid, split=split, label=label))
                vectors.append(vec)
                memberships[iid] = tuple(carried)
                for name in carried:
                    seg_vec = (
                        segment_offset
                        + strength_of[name] * directions[name]
                        + config.segment_noise * rng.standard_normal(dim)
                    )
                    seg_plan.append((iid, name, seg_vec))
                seg_plan.append(
                    (iid, None, segment_offset + config.segment_noise * rng.standard_normal(dim))
                )
                idx += 1

    emit_split("train", config.n_train_per_class, "tr")
    emit_split("test", config.n_test_per_class, "te")

    seg_width = max(5, len(str(len(seg_plan) - 1)))
    segments: list[Segment] = []
    concept_segments: dict[str, list[str]] = {spec.name: [] for spec in config.concepts}
    background_segments: dict[str, list[str]] = {
        f"background_{g}": [] for g in range(config.background_groups)
    }
    bg_counter = 0
    for j, (iid, concept_name, _vec) in enumerate(seg_plan):
        sid = f"sg{j:0{seg_width}d}"
        segments.append(Segment(id=sid, instance_id=iid))
        if concept_name is None:
            background_segments[f"background_{bg_counter % config.background_groups}"].append(sid)
            bg_counter += 1
        else:
            concept_segments[concept_name].append(sid)

    biased_class: dict[str, Optional[int]] = {}
    for spec in config.concepts:
        rates = spec.contamination
        biased_class[spec.name] = (
            None if rates[0] == rates[1] else int(np.argmax(rates))
        )

    bundle = DatasetBundle(
        dim=dim,
        classes=("class_a", "class_b"),
        instances=tuple(instances),
        segments=tuple(segments),
        instance_matrix=np.asarray(vectors, dtype=np.float32),
        segment_matrix=np.asarray([v for _, _, v in seg_plan], dtype=np.float32),
    )
    truth = GroundTruth(
        seed=config.seed,
        rng_algorithm=RNG_ALGORITHM,
        memberships=memberships,
        biased_class=biased_class,
        concept_segments={k: tuple(v) for k, v in concept_segments.items()},
        background_segments={k: tuple(v) for k, v in background_segments.items()},
        directions=directions,
        class_means=class_means,
        instance_offset=instance_offset,
        segment_offset=segment_offset,
    )
    return bundle, truth


def precision_at_k(ranking: Sequence[str], truth: set[str], k: int) -> float:
    """Fraction of the top-k ranked ids that belong to the truth set."""
    if k < 1:
        raise ValueError("k must be at least 1")
    top = list(ranking)[:k]
    return len([t for t in top if t in truth]) / k


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    payload = {
        "seed": truth.seed,
        "rng_algorithm": truth.rng_algorithm,
        "memberships": {k: list(v) for k, v in truth.memberships.items()},
        "biased_class": truth.biased_class,
        "concept_segments": {k: list(v) for k, v in truth.concept_segments.items()},
        "background_segments": {k: list(v) for k, v in truth.background_segments.items()},
        "directions": {k: v.tolist() for k, v in truth.directions.items()},
        "class_means": truth.class_means.tolist(),
        "instance_offset": truth.instance_offset.tolist(),
        "segment_offset": truth.segment_offset.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_ground_truth(path: str | Path) -> GroundTruth:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return GroundTruth(
        seed=int(payload["seed"]),
        rng_algorithm=payload["rng_algorithm"],
        memberships={k: tuple(v) for k, v in payload["memberships"].items()},
        biased_class={
            k: (None if v is None else int(v)) for k, v in payload["biased_class"].items()
        },
        concept_segments={k: tuple(v) for k, v in payload["concept_segments"].items()},
        background_segments={
            k: tuple(v) for k, v in payload["background_segments"].items()
        },
        directions={k: np.array(v) for k, v in payload["directions"].items()},
        class_means=np.array(payload["class_means"]),
        instance_offset=np.array(payload["instance_offset"]),
        segment_offset=np.array(payload["segment_offset"]),
    )
