import numpy as np
import pytest

from escape import synthetic
from escape.bundle import (
    BundleError,
    ClassPair,
    DatasetBundle,
    Instance,
    Segment,
    load_bundle,
    read_bundle,
    validate_bundle,
    write_bundle,
)


def tiny_bundle(**overrides):
    fields = dict(
        dim=3,
        classes=("a", "b"),
        instances=(
            Instance(id="i0", split="train", label=0),
            Instance(id="i1", split="test", label=1),
        ),
        segments=(Segment(id="s0", instance_id="i0"),),
        instance_matrix=np.arange(6, dtype=np.float32).reshape(2, 3),
        segment_matrix=np.ones((1, 3), dtype=np.float32),
    )
    fields.update(overrides)
    return DatasetBundle(**fields)


def test_load_small_bundle_shapes(tmp_path):
    write_bundle(tiny_bundle(), tmp_path)
    loaded = load_bundle(tmp_path)
    assert loaded.instance_matrix.shape == (2, 3)
    assert loaded.dim == 3
    assert loaded.classes == ("a", "b")
    assert loaded.instances[1].split == "test"
    # 2 instances x dim 3 x 4 bytes
    assert (tmp_path / "instances.f32").stat().st_size == 24


def test_truncated_matrix_file_rejected(tmp_path):
    write_bundle(tiny_bundle(), tmp_path)
    data = (tmp_path / "instances.f32").read_bytes()
    (tmp_path / "instances.f32").write_bytes(data[:20])
    with pytest.raises(BundleError, match="not divisible"):
        load_bundle(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(BundleError, match="does not exist"):
        load_bundle(tmp_path / "nowhere")
    (tmp_path / "x").mkdir()
    with pytest.raises(BundleError, match="manifest.json"):
        load_bundle(tmp_path / "x")


def test_row_count_mismatch(tmp_path):
    write_bundle(tiny_bundle(), tmp_path)
    data = (tmp_path / "instances.f32").read_bytes()
    (tmp_path / "instances.f32").write_bytes(data + data)  # 4 rows, manifest says 2
    with pytest.raises(BundleError, match="manifest declares"):
        load_bundle(tmp_path)


def test_generator_output_roundtrips_bit_identical(tmp_path):
    config = synthetic.PlantConfig(seed=42, dim=16, n_train_per_class=20, n_test_per_class=10)
    bundle, _ = synthetic.generate(config)
    write_bundle(bundle, tmp_path)
    loaded = load_bundle(tmp_path)
    assert loaded.instance_matrix.tobytes() == bundle.instance_matrix.tobytes()
    assert loaded.segment_matrix.tobytes() == bundle.segment_matrix.tobytes()
    assert loaded.instances == bundle.instances
    assert loaded.segments == bundle.segments


def test_validate_clean_bundle_is_empty():
    assert validate_bundle(tiny_bundle()) == []


def test_validate_reports_orphan_segment():
    bundle = tiny_bundle(
        segments=(Segment(id="s0", instance_id="ghost"),),
    )
    violations = validate_bundle(bundle)
    assert len(violations) == 1
    assert "s0" in violations[0] and "ghost" in violations[0]


def test_validate_reports_nan_with_instance_id():
    matrix = np.arange(6, dtype=np.float32).reshape(2, 3)
    matrix[0][0] = np.nan
    violations = validate_bundle(tiny_bundle(instance_matrix=matrix))
    assert any("i0" in v and "non-finite" in v for v in violations)


def test_validate_reports_duplicate_ids():
    bundle = tiny_bundle(
        instances=(
            Instance(id="i0", split="train", label=0),
            Instance(id="i0", split="test", label=1),
        )
    )
    assert any("duplicate" in v for v in validate_bundle(bundle))


def test_validate_reports_bad_label_and_split():
    bundle = tiny_bundle(
        instances=(
            Instance(id="i0", split="train", label=5),
            Instance(id="i1", split="weird", label=1),
        )
    )
    violations = validate_bundle(bundle)
    assert any("label" in v for v in violations)
    assert any("split" in v for v in violations)


def test_validate_bad_bbox():
    bundle = tiny_bundle(segments=(Segment(id="s0", instance_id="i0", bbox=(0, 0, 0, 5)),))
    assert any("bbox" in v for v in validate_bundle(bundle))


def test_generator_bundles_valid_across_seeds():
    for seed in range(20):
        config = synthetic.PlantConfig(
            seed=seed, dim=12, n_train_per_class=15, n_test_per_class=8
        )
        bundle, _ = synthetic.generate(config)
        assert validate_bundle(bundle) == []


def test_class_pair_requires_distinct():
    with pytest.raises(ValueError):
        ClassPair(negative=1, positive=1)


def test_read_bundle_skips_invariant_checks(tmp_path):
    bundle = tiny_bundle(segments=(Segment(id="s0", instance_id="ghost"),))
    write_bundle(bundle, tmp_path)
    read_bundle(tmp_path)  # structural read succeeds
    with pytest.raises(BundleError, match="ghost"):
        load_bundle(tmp_path)
