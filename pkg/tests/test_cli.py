import json
from pathlib import Path

import numpy as np
import pytest

from escape import synthetic
from escape.bundle import write_bundle
from escape.cli import main


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = synthetic.PlantConfig(seed=11, dim=16, n_train_per_class=60, n_test_per_class=30)
    bundle, truth = synthetic.generate(config)
    write_bundle(bundle, root / "bundle")
    synthetic.write_ground_truth(truth, root / "bundle" / "ground_truth.json")
    concepts = [{"name": "spurious", "segment_ids": list(truth.concept_segments["spurious"])}]
    for group, ids in sorted(truth.background_segments.items()):
        concepts.append({"name": group, "segment_ids": list(ids)})
    (root / "concepts.json").write_text(json.dumps(concepts))
    return root


def read_csv(path):
    return Path(path).read_text(encoding="utf-8")


def test_validate_ok(bundle_dir, capsys):
    assert main(["validate", str(bundle_dir / "bundle")]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_broken_bundle(tmp_path, capsys):
    (tmp_path / "manifest.json").write_text("{not json")
    assert main(["validate", str(tmp_path)]) == 1
    assert "invalid" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["synth"])  # missing required --out
    assert exc.value.code == 2


def test_synth_writes_valid_bundle(tmp_path, capsys):
    config = {"dim": 12, "n_train_per_class": 20, "n_test_per_class": 10}
    (tmp_path / "cfg.json").write_text(json.dumps(config))
    assert (
        main(
            [
                "synth",
                "--seed",
                "3",
                "--out",
                str(tmp_path / "b"),
                "--config",
                str(tmp_path / "cfg.json"),
            ]
        )
        == 0
    )
    assert (tmp_path / "b" / "ground_truth.json").is_file()
    assert main(["validate", str(tmp_path / "b")]) == 0


def test_diagnose_deterministic_across_runs(bundle_dir, tmp_path):
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    assert main(["diagnose", str(bundle_dir / "bundle"), "--seed", "9", "--out", str(out1)]) == 0
    assert main(["diagnose", str(bundle_dir / "bundle"), "--seed", "9", "--out", str(out2)]) == 0
    assert (out1 / "diagnosis.csv").read_bytes() == (out2 / "diagnosis.csv").read_bytes()
    assert (out1 / "confusion.csv").read_bytes() == (out2 / "confusion.csv").read_bytes()
    text = read_csv(out1 / "diagnosis.csv")
    assert text.startswith("metric,value\n")
    assert "accuracy," in text


def test_diagnose_seed_env_fallback(bundle_dir, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ESCAPE_SEED", "77")
    assert main(["diagnose", str(bundle_dir / "bundle"), "--out", str(tmp_path / "env")]) == 0
    assert "seed,77" in read_csv(tmp_path / "env" / "diagnosis.csv")


def test_associate_report(bundle_dir, tmp_path):
    out = tmp_path / "assoc"
    assert (
        main(
            [
                "associate",
                str(bundle_dir / "bundle"),
                "--concepts",
                str(bundle_dir / "concepts.json"),
                "--pair",
                "0,1",
                "--seed",
                "4",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    lines = read_csv(out / "association.csv").strip().split("\n")
    header = lines[0].split(",")
    assert header[:4] == ["split", "instance_id", "label", "concept_id"]
    # 3 concepts x (120 train + 60 test) rows
    assert len(lines) - 1 == 3 * 180


def test_disparity_report(bundle_dir, capsys):
    assert (
        main(
            [
                "disparity",
                str(bundle_dir / "bundle"),
                "--concepts",
                str(bundle_dir / "concepts.json"),
                "--seed",
                "4",
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0].startswith("concept_id,concept_name,disparity")
    row = lines[1].split(",")
    assert row[1] == "spurious"
    # Pair (0,1): concept biased toward class 0, so the sum is negative.
    assert float(row[2]) < 0


def test_influence_report(bundle_dir, capsys):
    assert (
        main(
            [
                "influence",
                str(bundle_dir / "bundle"),
                "--concepts",
                str(bundle_dir / "concepts.json"),
                "--seed",
                "4",
            ]
        )
        == 0
    )
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0].split(",")[:3] == ["concept_id", "concept_name", "group"]
    assert len(lines) - 1 == 3 * 2  # FP and FN rows per concept


def test_curve_deterministic_and_shape(bundle_dir, tmp_path):
    args = [
        "curve",
        str(bundle_dir / "bundle"),
        "--concepts",
        str(bundle_dir / "concepts.json"),
        "--concept",
        "spurious",
        "--seed",
        "4",
        "--evaluate",
    ]
    out1, out2 = tmp_path / "c1", tmp_path / "c2"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "curve.csv").read_bytes() == (out2 / "curve.csv").read_bytes()
    lines = read_csv(out1 / "curve.csv").strip().split("\n")
    assert lines[0] == "n,rbr,disparity_after,acc_after,subgroup_after"
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == 1.0
    assert first[3] != ""  # evaluate filled the accuracy column


def test_evaluate_with_random_control(bundle_dir, capsys):
    base = [
        "evaluate",
        str(bundle_dir / "bundle"),
        "--concepts",
        str(bundle_dir / "concepts.json"),
        "--concept",
        "spurious",
        "--n",
        "20",
        "--seed",
        "4",
    ]
    assert main(base) == 0
    ranked = capsys.readouterr().out.strip().split("\n")
    assert main(base + ["--control", "random"]) == 0
    random_out = capsys.readouterr().out.strip().split("\n")
    assert ranked[0] == random_out[0]  # same header / row shape
    assert ranked[1].split(",")[2] == "ranked"
    assert random_out[1].split(",")[2] == "random"
    assert len(ranked[1].split(",")) == len(random_out[1].split(","))


def test_unknown_concept_reference(bundle_dir, capsys):
    assert (
        main(
            [
                "curve",
                str(bundle_dir / "bundle"),
                "--concepts",
                str(bundle_dir / "concepts.json"),
                "--concept",
                "missing",
                "--seed",
                "4",
            ]
        )
        == 1
    )
    assert "missing" in capsys.readouterr().err
