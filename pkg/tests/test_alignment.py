import numpy as np
import pytest

from escape import synthetic
from escape.alignment import (
    concept_vector,
    fit_normalizer,
    normalize_instances,
    project_segments,
)


def test_fit_normalizer_hand_case():
    norm = fit_normalizer(np.array([[0.0, 0.0], [2.0, 2.0]]))
    assert np.allclose(norm.mean, [1.0, 1.0])
    assert np.allclose(norm.std, [1.0, 1.0])


def test_fit_normalizer_clamps_constant_column():
    matrix = np.array([[1.0, 5.0], [1.0, 7.0], [1.0, 9.0]])
    norm = fit_normalizer(matrix)
    assert norm.std[0] == 1e-8
    out = normalize_instances(matrix, norm)
    assert np.isfinite(out).all()


def test_fit_normalizer_requires_two_rows():
    with pytest.raises(ValueError):
        fit_normalizer(np.ones((1, 4)))


def test_normalized_output_statistics():
    rng = np.random.Generator(np.random.PCG64(3))
    matrix = rng.normal(5.0, 2.5, size=(100, 5))
    norm = fit_normalizer(matrix)
    out = normalize_instances(matrix, norm)
    # Recompute the statistics of the transformed data independently.
    assert np.abs(out.mean(axis=0)).max() < 1e-9
    assert np.abs(out.std(axis=0) - 1.0).max() < 1e-9


def test_normalize_is_invertible():
    rng = np.random.Generator(np.random.PCG64(4))
    matrix = rng.normal(0, 3, size=(50, 8))
    norm = fit_normalizer(matrix)
    out = normalize_instances(matrix, norm)
    back = out * norm.std + norm.mean
    assert np.abs((back - matrix) / np.maximum(np.abs(matrix), 1e-12)).max() < 1e-6


def test_dimension_mismatch_rejected():
    norm = fit_normalizer(np.ones((3, 4)) + np.eye(3, 4))
    with pytest.raises(ValueError, match="dimension"):
        normalize_instances(np.ones((2, 5)), norm)


def test_zero_mean_unit_std_input_unchanged():
    rng = np.random.Generator(np.random.PCG64(5))
    matrix = rng.normal(size=(200, 4))
    matrix = (matrix - matrix.mean(axis=0)) / matrix.std(axis=0)
    out = normalize_instances(matrix, fit_normalizer(matrix))
    assert np.allclose(out, matrix, atol=1e-9)


def test_segment_at_instance_mean_maps_to_zero():
    matrix = np.array([[0.0, 2.0], [4.0, 6.0]])
    norm = fit_normalizer(matrix)
    out = project_segments(np.array([[2.0, 4.0]]), norm)
    assert np.allclose(out, 0.0)


def test_symmetric_segments_map_to_negatives():
    matrix = np.array([[0.0, 2.0], [4.0, 6.0]])
    norm = fit_normalizer(matrix)
    out = project_segments(np.array([[3.0, 5.0], [1.0, 3.0]]), norm)
    assert np.allclose(out[0], -out[1])


def test_projection_agrees_with_instance_normalization():
    rng = np.random.Generator(np.random.PCG64(6))
    matrix = rng.normal(2, 4, size=(30, 6))
    rows = rng.normal(size=(5, 6))
    norm = fit_normalizer(matrix)
    assert np.array_equal(normalize_instances(rows, norm), project_segments(rows, norm))


def test_alignment_separates_planted_concept_clusters():
    # Two concept segment clusters are near-parallel in the raw space
    # (shared subspace offset dominates) and separate after alignment.
    config = synthetic.PlantConfig(
        seed=7,
        dim=32,
        n_train_per_class=60,
        n_test_per_class=20,
        concepts=(
            synthetic.ConceptSpec(name="one", contamination=(0.25, 0.25), strength=3.0),
            synthetic.ConceptSpec(name="two", contamination=(0.25, 0.25), strength=3.0),
        ),
    )
    bundle, truth = synthetic.generate(config)

    def cluster_rows(name):
        return [bundle.segment_index[s] for s in truth.concept_segments[name]]

    def cosine(u, v):
        return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))

    raw_c1 = bundle.segment_matrix[cluster_rows("one")].mean(axis=0)
    raw_c2 = bundle.segment_matrix[cluster_rows("two")].mean(axis=0)
    assert cosine(raw_c1, raw_c2) > 0.9

    train = bundle.instance_matrix[bundle.split_indices("train")]
    norm = fit_normalizer(train)
    aligned = project_segments(bundle.segment_matrix, norm)
    c1 = aligned[cluster_rows("one")].mean(axis=0)
    c2 = aligned[cluster_rows("two")].mean(axis=0)
    assert cosine(c1, c2) < 0.5


def test_concept_vector_single_segment_identity():
    segments = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert np.array_equal(concept_vector([1], segments), segments[1])


def test_concept_vector_opposite_segments_rejected():
    segments = np.array([[1.0, -2.0], [-1.0, 2.0]])
    with pytest.raises(ValueError, match="zero norm"):
        concept_vector([0, 1], segments)


def test_concept_vector_empty_selection_rejected():
    with pytest.raises(ValueError, match="at least one"):
        concept_vector([], np.ones((3, 2)))


def test_concept_vector_matches_column_means():
    rng = np.random.Generator(np.random.PCG64(8))
    segments = rng.normal(size=(10, 7))
    expected = np.array([segments[:, d].sum() / 10 for d in range(7)])
    assert np.allclose(concept_vector(range(10), segments), expected, atol=1e-12)


def test_concept_vector_permutation_invariant():
    rng = np.random.Generator(np.random.PCG64(9))
    segments = rng.normal(size=(6, 4))
    a = concept_vector([0, 2, 5], segments)
    b = concept_vector([5, 0, 2], segments)
    assert np.array_equal(a, b)
