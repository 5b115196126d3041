"""Dataset bundle: shared domain types plus on-disk loading and validation.

A bundle directory contains:

* ``manifest.json`` - UTF-8 JSON with fields ``version`` (must be 1),
  ``dim``, ``classes`` (ordered list; class index = position),
  ``instances`` (``{id, split, label, image?, coords2d?}``) and
  ``segments`` (``{id, instance_id, bbox?, image?}``).
* ``instances.f32`` / ``segments.f32`` - raw row-major little-endian
  32-bit floats, no header; shapes come from the manifest.

Bundles are immutable after load and safe to share across workers.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MANIFEST_NAME = "manifest.json"
INSTANCES_NAME = "instances.f32"
SEGMENTS_NAME = "segments.f32"

SPLITS = ("train", "test")


class BundleError(Exception):
    """Raised when a bundle directory cannot be read or fails validation."""


@dataclass(frozen=True)
class Instance:
    id: str
    split: str  # "train" or "test"
    label: int  # index into DatasetBundle.classes
    image_path: Optional[str] = None
    coords2d: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class Segment:
    id: str
    instance_id: str
    bbox: Optional[tuple[float, float, float, float]] = None  # x, y, w, h
    image_path: Optional[str] = None


@dataclass(frozen=True)
class Concept:
    """A named group of segments with its centroid vector in the aligned space."""

    id: str
    name: str
    segment_ids: tuple[str, ...]
    vector: np.ndarray


@dataclass(frozen=True)
class ClassPair:
    negative: int
    positive: int

    def __post_init__(self) -> None:
        if self.negative == self.positive:
            raise ValueError("class pair must name two distinct classes")


class ConfusionCase(enum.Enum):
    """Confusion case of an instance relative to a ClassPair."""

    TN = "TN"
    FP = "FP"
    FN = "FN"
    TP = "TP"


@dataclass(frozen=True)
class DatasetBundle:
    dim: int
    classes: tuple[str, ...]
    instances: tuple[Instance, ...]
    segments: tuple[Segment, ...]
    instance_matrix: np.ndarray  # N x dim, float32
    segment_matrix: np.ndarray  # M x dim, float32

    # Derived lookups, built once in __post_init__.
    instance_index: dict[str, int] = field(default_factory=dict, compare=False)
    segment_index: dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        self.instance_index.update({ins.id: i for i, ins in enumerate(self.instances)})
        self.segment_index.update({seg.id: i for i, seg in enumerate(self.segments)})

    @property
    def labels(self) -> np.ndarray:
        return np.array([ins.label for ins in self.instances], dtype=np.int64)

    def split_indices(self, split: str) -> np.ndarray:
        return np.array(
            [i for i, ins in enumerate(self.instances) if ins.split == split],
            dtype=np.int64,
        )

    def segments_of(self, instance_id: str) -> list[Segment]:
        return [s for s in self.segments if s.instance_id == instance_id]


def validate_bundle(bundle: DatasetBundle) -> list[str]:
    """Check every bundle invariant; returns one description per violation.

    Violations are data, not errors: an empty list means the bundle is valid.
    """
    out: list[str] = []
    n_classes = len(bundle.classes)

    if bundle.dim <= 0:
        out.append(f"dim must be positive, got {bundle.dim}")
    if bundle.instance_matrix.shape != (len(bundle.instances), bundle.dim):
        out.append(
            f"instance matrix shape {bundle.instance_matrix.shape} does not match "
            f"{len(bundle.instances)} instances x dim {bundle.dim}"
        )
    if bundle.segment_matrix.shape != (len(bundle.segments), bundle.dim):
        out.append(
            f"segment matrix shape {bundle.segment_matrix.shape} does not match "
            f"{len(bundle.segments)} segments x dim {bundle.dim}"
        )

    seen: set[str] = set()
    for ins in bundle.instances:
        if ins.id in seen:
            out.append(f"duplicate instance id {ins.id!r}")
        seen.add(ins.id)
        if ins.split not in SPLITS:
            out.append(f"instance {ins.id!r} has unknown split {ins.split!r}")
        if not 0 <= ins.label < n_classes:
            out.append(f"instance {ins.id!r} label {ins.label} is out of range")
        if ins.coords2d is not None and not all(math.isfinite(c) for c in ins.coords2d):
            out.append(f"instance {ins.id!r} has non-finite coords2d")

    seen_seg: set[str] = set()
    for seg in bundle.segments:
        if seg.id in seen_seg:
            out.append(f"duplicate segment id {seg.id!r}")
        seen_seg.add(seg.id)
        if seg.instance_id not in bundle.instance_index:
            out.append(f"segment {seg.id!r} references missing instance {seg.instance_id!r}")
        if seg.bbox is not None and (seg.bbox[2] <= 0 or seg.bbox[3] <= 0):
            out.append(f"segment {seg.id!r} bbox has non-positive width or height")

    if bundle.instance_matrix.size:
        bad = ~np.isfinite(bundle.instance_matrix).all(axis=1)
        for i in np.flatnonzero(bad):
            out.append(f"instance {bundle.instances[i].id!r} has a non-finite activation value")
    if bundle.segment_matrix.size:
        bad = ~np.isfinite(bundle.segment_matrix).all(axis=1)
        for i in np.flatnonzero(bad):
            out.append(f"segment {bundle.segments[i].id!r} has a non-finite activation value")

    return out


def _read_matrix(path: Path, dim: int, n_rows: int, what: str) -> np.ndarray:
    if not path.is_file():
        raise BundleError(f"missing file {path.name}")
    data = path.read_bytes()
    if len(data) % (4 * dim) != 0:
        raise BundleError(
            f"{path.name}: byte length not divisible by 4*dim ({len(data)} bytes, dim {dim})"
        )
    rows = len(data) // (4 * dim)
    if rows != n_rows:
        raise BundleError(
            f"{path.name}: {rows} rows of dim {dim} but manifest declares {n_rows} {what}"
        )
    return np.frombuffer(data, dtype="<f4").reshape(rows, dim)


def _parse_manifest(path: Path) -> dict:
    if not path.is_file():
        raise BundleError(f"missing file {path.name}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path.name}: invalid JSON ({exc})") from exc
    if manifest.get("version") != 1:
        raise BundleError(f"{path.name}: unsupported version {manifest.get('version')!r}")
    for key in ("dim", "classes", "instances", "segments"):
        if key not in manifest:
            raise BundleError(f"{path.name}: missing field {key!r}")
    return manifest


def read_bundle(path: str | Path) -> DatasetBundle:
    """Read a bundle directory without enforcing invariants.

    Raises BundleError only for structural problems (missing files, bad
    JSON, byte-length mismatches). Use validate_bundle for the rest.
    """
    root = Path(path)
    if not root.is_dir():
        raise BundleError(f"bundle directory {root} does not exist")
    manifest = _parse_manifest(root / MANIFEST_NAME)
    dim = int(manifest["dim"])
    if dim <= 0:
        raise BundleError(f"manifest dim must be positive, got {dim}")

    instances = tuple(
        Instance(
            id=str(e["id"]),
            split=str(e["split"]),
            label=int(e["label"]),
            image_path=e.get("image"),
            coords2d=tuple(e["coords2d"]) if e.get("coords2d") is not None else None,
        )
        for e in manifest["instances"]
    )
    segments = tuple(
        Segment(
            id=str(e["id"]),
            instance_id=str(e["instance_id"]),
            bbox=tuple(e["bbox"]) if e.get("bbox") is not None else None,
            image_path=e.get("image"),
        )
        for e in manifest["segments"]
    )
    instance_matrix = _read_matrix(root / INSTANCES_NAME, dim, len(instances), "instances")
    segment_matrix = _read_matrix(root / SEGMENTS_NAME, dim, len(segments), "segments")
    return DatasetBundle(
        dim=dim,
        classes=tuple(str(c) for c in manifest["classes"]),
        instances=instances,
        segments=segments,
        instance_matrix=instance_matrix,
        segment_matrix=segment_matrix,
    )


def load_bundle(path: str | Path) -> DatasetBundle:
    """Read and fully validate a bundle directory.

    Deterministic for identical bytes. Raises BundleError naming the
    offending entity on the first validation failure.
    """
    bundle = read_bundle(path)
    violations = validate_bundle(bundle)
    if violations:
        raise BundleError("; ".join(violations))
    return bundle


def write_bundle(bundle: DatasetBundle, path: str | Path) -> None:
    """Write a bundle directory in the manifest + raw-f32 layout."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": 1,
        "dim": bundle.dim,
        "classes": list(bundle.classes),
        "instances": [_instance_entry(ins) for ins in bundle.instances],
        "segments": [_segment_entry(seg) for seg in bundle.segments],
    }
    (root / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=1, sort_keys=False), encoding="utf-8"
    )
    (root / INSTANCES_NAME).write_bytes(
        np.ascontiguousarray(bundle.instance_matrix, dtype="<f4").tobytes()
    )
    (root / SEGMENTS_NAME).write_bytes(
        np.ascontiguousarray(bundle.segment_matrix, dtype="<f4").tobytes()
    )


def _instance_entry(ins: Instance) -> dict:
    entry: dict = {"id": ins.id, "split": ins.split, "label": ins.label}
    if ins.image_path is not None:
        entry["image"] = ins.image_path
    if ins.coords2d is not None:
        entry["coords2d"] = list(ins.coords2d)
    return entry


def _segment_entry(seg: Segment) -> dict:
    entry: dict = {"id": seg.id, "instance_id": seg.instance_id}
    if seg.bbox is not None:
        entry["bbox"] = list(seg.bbox)
    if seg.image_path is not None:
        entry["image"] = seg.image_path
    return entry
