import numpy as np
import pytest

from escape import debias
from escape.bundle import ClassPair
from escape.debias import (
    DebiasCurve,
    debias_curve,
    debias_rows,
    debias_vector,
    recommend_n,
    remaining_bias_ratio,
    select_candidates,
)

PAIR = ClassPair(negative=1, positive=0)  # positive side = contaminated class_a


def test_debias_hand_case():
    assert np.allclose(debias_vector(np.array([1.0, 1.0]), np.array([1.0, 0.0])), [0.0, 1.0])


def test_debias_orthogonal_input_unchanged():
    v = np.array([0.0, 2.0, 0.0])
    c = np.array([1.0, 0.0, 0.0])
    assert np.allclose(debias_vector(v, c), v)


def test_debias_collinear_gives_zero():
    c = np.array([2.0, -1.0])
    assert np.allclose(debias_vector(3 * c, c), 0.0, atol=1e-12)


def test_debias_zero_concept_rejected():
    with pytest.raises(ValueError):
        debias_vector(np.ones(2), np.zeros(2))


def test_debias_idempotent_orthogonal_norm():
    rng = np.random.Generator(np.random.PCG64(30))
    for _ in range(100):
        v = rng.normal(size=16)
        c = rng.normal(size=16)
        once = debias_vector(v, c)
        twice = debias_vector(once, c)
        assert np.abs(twice - once).max() <= 1e-9
        assert abs(np.dot(once, c)) <= 1e-9 * np.linalg.norm(v) * np.linalg.norm(c)
        assert np.linalg.norm(once) <= np.linalg.norm(v) + 1e-12


def test_debias_rows_touches_only_listed_rows():
    rng = np.random.Generator(np.random.PCG64(31))
    m = rng.normal(size=(6, 4))
    c = rng.normal(size=4)
    out = debias_rows(m, [1, 3], c)
    assert np.array_equal(out[0], m[0])
    assert np.allclose(out[1], debias_vector(m[1], c))
    assert np.allclose(out[3], debias_vector(m[3], c))
    assert not np.array_equal(out[1], m[1])


def test_remaining_bias_ratio_values():
    assert remaining_bias_ratio(2.0, 2.0) == 1.0
    assert remaining_bias_ratio(2.0, 0.0) == 0.0
    assert remaining_bias_ratio(2.0, 1.0) == pytest.approx(0.5)


def test_remaining_bias_ratio_near_zero_before():
    with pytest.raises(ValueError):
        remaining_bias_ratio(1e-12, 1.0)


def test_remaining_bias_ratio_alternate_form():
    # The 1 - (after-before)/before form rises to 2 at full mitigation.
    assert remaining_bias_ratio(2.0, 0.0, one_minus_change=True) == pytest.approx(2.0)
    assert remaining_bias_ratio(2.0, 2.0, one_minus_change=True) == pytest.approx(1.0)


def hand_curve():
    return DebiasCurve(
        concept_id="c0",
        grid=(0, 100, 200),
        rbr=(1.0, 0.5, 0.45),
        disparity_before=10.0,
        disparity_after=(10.0, 5.0, 4.5),
        n_candidates=200,
    )


def test_recommend_tolerance_zero_is_zero():
    assert recommend_n(hand_curve(), 0.0) == 0


def test_recommend_tolerance_one_minimizes_rbr():
    assert recommend_n(hand_curve(), 1.0) == 200
    tied = DebiasCurve(
        concept_id="c0",
        grid=(0, 50, 100),
        rbr=(1.0, 0.4, 0.4),
        disparity_before=1.0,
        disparity_after=(1.0, 0.4, 0.4),
        n_candidates=100,
    )
    assert recommend_n(tied, 1.0) == 50  # smallest n on ties


def test_recommend_hand_tie_table():
    # t=0.5, N_max=200: costs are 0.5, 0.5, 0.725; the 0 <-> 100 tie
    # resolves to the smaller n.
    assert recommend_n(hand_curve(), 0.5) == 0


def test_recommend_monotone_in_tolerance():
    rng = np.random.Generator(np.random.PCG64(32))
    for _ in range(50):
        grid = (0, 25, 50, 100, 200)
        drops = np.sort(rng.random(len(grid) - 1))[::-1]
        rbr = tuple([1.0] + list(1.0 - np.cumsum(drops) / (np.sum(drops) + 0.1)))
        curve = DebiasCurve(
            concept_id="c",
            grid=grid,
            rbr=rbr,
            disparity_before=1.0,
            disparity_after=rbr,
            n_candidates=200,
        )
        last = 0
        for t in np.linspace(0, 1, 21):
            n = recommend_n(curve, float(t))
            assert n >= last
            last = n


def test_recommend_invalid_tolerance():
    with pytest.raises(ValueError):
        recommend_n(hand_curve(), 1.5)


def test_select_candidates_matches_frex_order(planted_runs):
    ws, concepts, _ = planted_runs[0]
    table = ws.train_table(concepts)
    ids = select_candidates(table, "c0")
    col = table.concept_column("c0")
    frex = {iid: table.frex[i, col] for i, iid in enumerate(table.instance_ids)}
    scores = [frex[i] for i in ids]
    assert all(scores[i] >= scores[i + 1] - 1e-15 for i in range(len(scores) - 1))
    assert set(ids) == set(ws.train_ids)


def test_top_candidates_enriched_in_planted_carriers(planted_runs):
    ws, concepts, truth = planted_runs[0]
    table = ws.train_table(concepts)
    ids = select_candidates(table, "c0")
    carriers = truth.carriers("spurious", ws.train_ids)
    base_rate = len(carriers) / len(ws.train_ids)
    top_rate = len([i for i in ids[:10] if i in carriers]) / 10
    assert top_rate > base_rate


def test_curve_zero_point_exact(planted_runs):
    ws, concepts, _ = planted_runs[1]
    curve = debias_curve(ws, concepts, "c0", PAIR, grid=(0, 25), evaluate=True)
    assert curve.rbr[0] == 1.0
    assert curve.disparity_after[0] == curve.disparity_before
    assert curve.accuracy_after[0] == curve.accuracy_before
    assert curve.subgroup_after[0] == curve.subgroup_before


def test_curve_grid_validation(planted_runs):
    ws, concepts, _ = planted_runs[1]
    with pytest.raises(ValueError, match="start at 0"):
        debias_curve(ws, concepts, "c0", PAIR, grid=(25, 50))
    with pytest.raises(ValueError, match="sorted"):
        debias_curve(ws, concepts, "c0", PAIR, grid=(0, 50, 25))
    with pytest.raises(ValueError, match="exceeds"):
        debias_curve(ws, concepts, "c0", PAIR, grid=(0, 10**6))


def test_evaluate_zero_is_identity(planted_runs):
    ws, concepts, _ = planted_runs[2]
    result = debias.evaluate_debias(ws, concepts, "c0", PAIR, 0)
    assert result.acc_before == result.acc_after
    assert result.subgroup_before == result.subgroup_after
    assert result.pct_bias_mitigated == 0.0


def test_evaluate_rejects_out_of_range(planted_runs):
    ws, concepts, _ = planted_runs[2]
    with pytest.raises(ValueError, match="n must be"):
        debias.evaluate_debias(ws, concepts, "c0", PAIR, 10**6)


def test_evaluate_random_control_uses_n_ids(planted_runs):
    ws, concepts, _ = planted_runs[2]
    result = debias.evaluate_debias(ws, concepts, "c0", PAIR, 50, control="random")
    assert result.control == "random"
    assert result.n == 50
    repeat = debias.evaluate_debias(ws, concepts, "c0", PAIR, 50, control="random")
    assert repeat.acc_after == result.acc_after  # seeded control is deterministic
