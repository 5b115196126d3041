import math

import numpy as np
import pytest

from escape.head import (
    HeadConfig,
    HeadModel,
    brier_score,
    concept_influence,
    load_head,
    predict,
    predict_batch,
    prob_gradient,
    save_head,
    train_head,
)


def blobs(seed=0, n=200, sep=8.0):
    """Two unit-variance Gaussian blobs, each mean sep/2 sigmas from the midpoint."""
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.normal((-sep / 2, 0), 1.0, size=(n, 2))
    b = rng.normal((+sep / 2, 0), 1.0, size=(n, 2))
    x = np.vstack([a, b])
    y = np.array([0] * n + [1] * n)
    return x, y


def test_separable_blobs_reach_high_train_accuracy():
    x, y = blobs(seed=1)
    head = train_head(x, y, seed=3)
    pred = predict_batch(head, x)
    assert np.mean(pred.predicted == y) >= 0.99


def test_single_class_labels_rejected():
    x, _ = blobs()
    with pytest.raises(ValueError, match="two classes"):
        train_head(x, np.zeros(len(x), dtype=int), seed=0)


def test_same_seed_bit_identical_weights():
    x, y = blobs(seed=2)
    h1 = train_head(x, y, seed=7)
    h2 = train_head(x, y, seed=7)
    assert np.array_equal(h1.weights, h2.weights)
    assert np.array_equal(h1.bias, h2.bias)
    h3 = train_head(x, y, seed=8)
    assert not np.array_equal(h1.weights, h3.weights)


def test_training_loss_non_increasing():
    x, y = blobs(seed=3)
    head = train_head(x, y, seed=0)
    assert head.meta["final_loss"] <= head.meta["initial_loss"]


def test_zero_head_gives_uniform_probs():
    head = HeadModel(weights=np.zeros((3, 4)), bias=np.zeros(3))
    p = predict(head, np.ones(4))
    assert np.allclose(p.probs, 1 / 3)


def test_large_logit_saturates():
    head = HeadModel(weights=np.array([[10.0], [0.0]]), bias=np.zeros(2))
    p = predict(head, np.array([10.0]))
    assert p.probs[0] > 0.999999
    assert p.predicted == 0


def test_predict_matches_hand_softmax():
    w = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.5]])
    b = np.array([0.1, -0.2, 0.0])
    v = np.array([0.4, 1.2])
    logits = [1.0 * 0.4 + 0.1, 1.2 - 0.2, -0.4 + 0.6]
    exps = [math.exp(z) for z in logits]
    expected = [e / sum(exps) for e in exps]
    p = predict(HeadModel(weights=w, bias=b), v)
    assert np.allclose(p.probs, expected, atol=1e-12)


def test_predict_dimension_mismatch():
    head = HeadModel(weights=np.zeros((2, 3)), bias=np.zeros(2))
    with pytest.raises(ValueError, match="dimension"):
        predict(head, np.ones(4))


def test_brier_trivials():
    assert brier_score(np.array([0.0, 1.0]), 1) == 0.0
    assert brier_score(np.array([1.0, 0.0]), 1) == 1.0
    assert brier_score(np.array([0.5, 0.5]), 0) == pytest.approx(0.25)


def test_brier_bounds_random_distributions():
    rng = np.random.Generator(np.random.PCG64(15))
    for _ in range(100):
        p = rng.dirichlet(np.ones(4))
        label = int(rng.integers(0, 4))
        b = brier_score(p, label)
        assert 0.0 <= b <= 1.0


def test_brier_zero_iff_one_hot_at_label():
    p = np.array([0.0, 1.0, 0.0])
    assert brier_score(p, 1) == 0.0
    assert brier_score(np.array([0.01, 0.99, 0.0]), 1) > 0.0


def test_predict_batch_matches_single():
    x, y = blobs(seed=4, n=20)
    head = train_head(x, y, seed=1)
    batch = predict_batch(head, x, y)
    for i in (0, 7, 33):
        single = predict(head, x[i], int(y[i]))
        assert np.allclose(batch.probs[i], single.probs)
        assert batch.predicted[i] == single.predicted
        assert batch.brier[i] == pytest.approx(single.brier)


def test_gradient_uniform_two_class_hand_case():
    w = np.array([[1.0, 2.0], [3.0, -1.0]])
    head = HeadModel(weights=w, bias=np.zeros(2))
    # At v=0 the probabilities are uniform, so grad = 1/4 (W_0 - W_1).
    g = prob_gradient(head, np.zeros(2), 0)
    assert np.allclose(g, 0.25 * (w[0] - w[1]), atol=1e-12)


def test_gradient_saturated_point_is_tiny():
    head = HeadModel(weights=np.array([[20.0], [0.0]]), bias=np.zeros(2))
    g = prob_gradient(head, np.array([5.0]), 0)
    assert np.linalg.norm(g) < 1e-10


def finite_difference_gradient(head, v, k, h=1e-4):
    g = np.zeros_like(v)
    for d in range(len(v)):
        up = v.copy()
        up[d] += h
        down = v.copy()
        down[d] -= h
        g[d] = (predict(head, up).probs[k] - predict(head, down).probs[k]) / (2 * h)
    return g


@pytest.mark.parametrize("kind", ["linear", "mlp"])
def test_gradient_matches_central_differences(kind):
    rng = np.random.Generator(np.random.PCG64(16))
    x = rng.normal(size=(120, 6))
    y = (x[:, 0] + 0.5 * x[:, 1] > 0).astype(int)
    head = train_head(x, y, HeadConfig(lr=0.3, iters=300, l2=1e-2), seed=5, kind=kind)
    for _ in range(20):
        v = rng.normal(size=6)
        k = int(rng.integers(0, 2))
        analytic = prob_gradient(head, v, k)
        numeric = finite_difference_gradient(head, v, k)
        denom = max(np.linalg.norm(numeric), 1e-12)
        assert np.linalg.norm(analytic - numeric) / denom <= 1e-4


def test_mlp_head_trains_and_predicts():
    x, y = blobs(seed=6)
    head = train_head(x, y, HeadConfig(lr=0.3, iters=500, l2=1e-3), seed=2, kind="mlp")
    assert head.kind == "mlp"
    pred = predict_batch(head, x)
    assert np.mean(pred.predicted == y) >= 0.95


def test_influence_all_positive_by_construction():
    head = HeadModel(weights=np.array([[1.0, 0.0], [0.0, 1.0]]), bias=np.zeros(2))
    # For k=0, grad = p0 p1 (W_0 - W_1) = p0 p1 (1, -1); along (1, -1) all positive.
    xs = np.random.default_rng(17).normal(size=(50, 2))
    infl = concept_influence(head, xs, np.array([1.0, -1.0]), 0)
    assert infl.positive_fraction == 1.0
    assert infl.mean_derivative > 0


def test_influence_negation_flips_fraction():
    rng = np.random.Generator(np.random.PCG64(18))
    x = rng.normal(size=(200, 4))
    y = (x[:, 0] > 0).astype(int)
    head = train_head(x, y, seed=3)
    direction = rng.normal(size=4)
    a = concept_influence(head, x, direction, 1)
    b = concept_influence(head, x, -direction, 1)
    assert a.positive_fraction == pytest.approx(1.0 - b.positive_fraction)
    assert a.mean_derivative == pytest.approx(-b.mean_derivative)


def test_influence_invariant_to_positive_scaling():
    rng = np.random.Generator(np.random.PCG64(19))
    x = rng.normal(size=(50, 3))
    y = (x[:, 0] > 0).astype(int)
    head = train_head(x, y, seed=4)
    direction = rng.normal(size=3)
    a = concept_influence(head, x, direction, 0)
    b = concept_influence(head, x, 5.0 * direction, 0)
    assert a.positive_fraction == b.positive_fraction
    assert a.mean_derivative == pytest.approx(b.mean_derivative)


def test_influence_rejects_empty_or_zero():
    head = HeadModel(weights=np.eye(2), bias=np.zeros(2))
    with pytest.raises(ValueError):
        concept_influence(head, np.empty((0, 2)), np.ones(2), 0)
    with pytest.raises(ValueError):
        concept_influence(head, np.ones((3, 2)), np.zeros(2), 0)


def test_influence_logit_target_linear_is_constant_sign():
    head = HeadModel(weights=np.array([[1.0, 2.0], [0.0, -1.0]]), bias=np.zeros(2))
    x = np.random.default_rng(20).normal(size=(30, 2))
    infl = concept_influence(head, x, np.array([1.0, 0.0]), 0, target="logit")
    assert infl.positive_fraction in (0.0, 1.0)
    assert infl.mean_derivative == pytest.approx(1.0)  # W_0 . (1, 0) = 1


def test_planted_concept_influence_beats_random_direction(planted_runs):
    from escape import diagnosis, head as head_mod
    from escape.bundle import ClassPair, ConfusionCase

    # Errors caused by the planted skew are true class_b predicted class_a;
    # with the pair oriented (negative=a, positive=b) they are FN cases.
    pair = ClassPair(negative=0, positive=1)
    planted_scores, random_scores = [], []
    for run_i, (ws, concepts, truth) in enumerate(planted_runs):
        pred = head_mod.predict_batch(ws.head, ws.aligned_test, ws.test_labels)
        idx, cases = diagnosis.pair_subset(ws.test_labels, pred, pair)
        fn_rows = [i for i, c in zip(idx, cases) if c is ConfusionCase.FN]
        if not fn_rows:
            continue
        contaminated = truth.biased_class["spurious"]
        planted = concept_influence(
            ws.head, ws.aligned_test[fn_rows], concepts[0].vector, contaminated
        )
        rng = np.random.Generator(np.random.PCG64(1000 + run_i))
        rand_dir = rng.normal(size=ws.bundle.dim)
        rand = concept_influence(ws.head, ws.aligned_test[fn_rows], rand_dir, contaminated)
        planted_scores.append(planted.positive_fraction)
        random_scores.append(rand.positive_fraction)
    assert len(planted_scores) >= 8
    assert np.mean(planted_scores) > np.mean(random_scores)


def test_head_json_roundtrip(tmp_path):
    x, y = blobs(seed=8, n=30)
    for kind in ("linear", "mlp"):
        head = train_head(x, y, HeadConfig(lr=0.3, iters=100, l2=1e-2), seed=6, kind=kind)
        save_head(head, tmp_path / f"{kind}.json")
        loaded = load_head(tmp_path / f"{kind}.json")
        v = np.array([0.5, -1.0])
        assert np.allclose(predict(loaded, v).probs, predict(head, v).probs, atol=1e-12)
