import numpy as np
import pytest

from escape import analysis, synthetic


def concept_groups(truth):
    """Planted concept first, then the background segment groups."""
    groups = [(name, ids) for name, ids in sorted(truth.concept_segments.items())]
    groups += [(name, ids) for name, ids in sorted(truth.background_segments.items())]
    return groups


def prepared_run(config, seed=None):
    bundle, truth = synthetic.generate(config)
    ws = analysis.prepare(bundle, seed=config.seed if seed is None else seed)
    concepts = analysis.build_concepts(ws, concept_groups(truth))
    return ws, concepts, truth


@pytest.fixture(scope="session")
def planted_runs():
    """Default-profile planted runs for seeds 0..9 (debias-oriented)."""
    return [prepared_run(synthetic.PlantConfig(seed=s)) for s in range(10)]


@pytest.fixture(scope="session")
def shifted_runs():
    """Planted runs with a misaligned segment subspace (ranking stress)."""
    return [
        prepared_run(synthetic.PlantConfig(seed=s, segment_shift=10.0)) for s in range(10)
    ]


@pytest.fixture(scope="session")
def small_bundle():
    config = synthetic.PlantConfig(
        seed=5, dim=16, n_train_per_class=40, n_test_per_class=20
    )
    bundle, truth = synthetic.generate(config)
    return bundle, truth
