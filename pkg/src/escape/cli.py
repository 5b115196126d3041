"""Batch command-line front door and service launcher.

Subcommands: validate, synth, diagnose, associate, disparity, influence,
curve, evaluate, serve. Outputs are CSV files with header rows, written
to --out when given, otherwise to stdout. Exit codes: 0 success, 1
validation or runtime failure, 2 usage error. The seed falls back to the
ESCAPE_SEED environment variable when --seed is omitted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import alignment, association, debias as debias_mod, diagnosis, head as head_mod
from .analysis import Workspace, build_concepts, prepare
from .bundle import BundleError, ClassPair, DatasetBundle, read_bundle, validate_bundle, write_bundle
from .synthetic import ConceptSpec, PlantConfig, generate, write_ground_truth

SEED_ENV = "ESCAPE_SEED"


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def _resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return 1


def _emit(rows: list[list], header: list[str], out_dir: Optional[str], filename: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())


def _load_concept_file(ws: Workspace, path: str):
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    return build_concepts(ws, [(e["name"], e["segment_ids"]) for e in entries])


def _find_concept(concepts, ref: str):
    for c in concepts:
        if c.id == ref or c.name == ref:
            return c
    raise KeyError(f"no concept with id or name {ref!r}")


def _parse_pair(bundle: DatasetBundle, spec: Optional[str]) -> ClassPair:
    if spec is None:
        if len(bundle.classes) == 2:
            return ClassPair(negative=0, positive=1)
        raise ValueError("--pair is required for bundles with more than two classes")
    parts = spec.split(",")
    if len(parts) != 2:
        raise ValueError("--pair expects two comma-separated class indices, e.g. 0,1")
    neg, pos = int(parts[0]), int(parts[1])
    k = len(bundle.classes)
    if not (0 <= neg < k and 0 <= pos < k):
        raise ValueError(f"pair indices must be in [0, {k})")
    return ClassPair(negative=neg, positive=pos)


# -- subcommands -----------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        bundle = read_bundle(args.bundle)
    except BundleError as exc:
        return _fail(f"invalid bundle: {exc}")
    violations = validate_bundle(bundle)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return 1
    print(f"OK: {len(bundle.instances)} instances, {len(bundle.segments)} segments, dim {bundle.dim}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if "concepts" in overrides:
        overrides["concepts"] = tuple(
            ConceptSpec(
                name=e["name"],
                contamination=tuple(e["contamination"]),
                strength=float(e["strength"]),
                test_contamination=(
                    tuple(e["test_contamination"]) if e.get("test_contamination") else None
                ),
            )
            for e in overrides["concepts"]
        )
    config = PlantConfig(seed=_resolve_seed(args.seed), **overrides)
    bundle, truth = generate(config)
    out = Path(args.out)
    write_bundle(bundle, out)
    write_ground_truth(truth, out / "ground_truth.json")
    print(f"wrote bundle with {len(bundle.instances)} instances to {out}")
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    bundle = read_bundle(args.bundle)
    seed = _resolve_seed(args.seed)
    ws = prepare(bundle, seed)
    pred = head_mod.predict_batch(ws.head, ws.aligned_test, ws.test_labels)
    summary = diagnosis.confusion_summary(pred, ws.test_labels, ws.uu_threshold)
    wrong = pred.predicted != ws.test_labels
    uu = wrong & (pred.brier >= ws.uu_threshold)
    rows = [
        ["seed", str(seed)],
        ["n_train", str(len(ws.train_idx))],
        ["n_test", str(len(ws.test_idx))],
        ["accuracy", _fmt(summary.accuracy)],
        ["correct", str(int((~wrong).sum()))],
        ["known_unknowns", str(int((wrong & ~uu).sum()))],
        ["unknown_unknowns", str(int(uu.sum()))],
        ["uu_threshold", _fmt(ws.uu_threshold)],
        ["final_loss", _fmt(ws.head.meta["final_loss"])],
    ]
    _emit(rows, ["metric", "value"], args.out, "diagnosis.csv")
    conf_rows = []
    k = len(bundle.classes)
    for t in range(k):
        for p in range(k):
            conf_rows.append(
                [
                    str(t),
                    str(p),
                    bundle.classes[t],
                    bundle.classes[p],
                    str(int(summary.matrix[t, p])),
                    str(int(summary.uu_matrix[t, p])),
                ]
            )
    _emit(
        conf_rows,
        ["true_label", "predicted_label", "true_class", "predicted_class", "count", "uu_count"],
        args.out,
        "confusion.csv",
    )
    if args.out:
        head_mod.save_head(ws.head, Path(args.out) / "head.json")
    return 0


def _split_tables(ws: Workspace, concepts, pair: ClassPair):
    """Association tables per split, restricted to instances of the pair."""
    out = {}
    for split, idx, matrix in (
        ("train", ws.train_idx, ws.aligned_train),
        ("test", ws.test_idx, ws.aligned_test),
    ):
        labels = ws.bundle.labels[idx]
        keep = np.flatnonzero((labels == pair.negative) | (labels == pair.positive))
        ids = [ws.bundle.instances[i].id for i in idx[keep]]
        out[split] = (
            association.build_table(matrix[keep], ids, concepts, ws.exclusivity_weight),
            labels[keep],
        )
    return out


def cmd_associate(args: argparse.Namespace) -> int:
    bundle = read_bundle(args.bundle)
    ws = prepare(bundle, _resolve_seed(args.seed))
    concepts = _load_concept_file(ws, args.concepts)
    pair = _parse_pair(bundle, args.pair)
    rows = []
    for split, (table, labels) in _split_tables(ws, concepts, pair).items():
        for j, concept in enumerate(concepts):
            for i, iid in enumerate(table.instance_ids):
                rows.append(
                    [
                        split,
                        iid,
                        str(int(labels[i])),
                        concept.id,
                        concept.name,
                        _fmt(table.raw[i, j]),
                        _fmt(table.z[i, j]),
                        str(int(table.raw_rank[i, j])),
                        str(int(table.ex_rank[i, j])),
                        _fmt(table.frex[i, j]),
                        str(int(table.comb_rank[i, j])),
                        str(int(table.top_concept[i] == j)),
                    ]
                )
    _emit(
        rows,
        [
            "split",
            "instance_id",
            "label",
            "concept_id",
            "concept_name",
            "raw",
            "z",
            "raw_rank",
            "ex_rank",
            "frex",
            "comb_rank",
            "is_top_concept",
        ],
        args.out,
        "association.csv",
    )
    return 0


def cmd_disparity(args: argparse.Namespace) -> int:
    bundle = read_bundle(args.bundle)
    ws = prepare(bundle, _resolve_seed(args.seed))
    concepts = _load_concept_file(ws, args.concepts)
    pair = _parse_pair(bundle, args.pair)
    table, labels = _split_tables(ws, concepts, pair)["train"]
    rows = []
    for j, concept in enumerate(concepts):
        disp = association.between_class_disparity(
            table.frex[:, j], labels, pair, np.arange(len(labels))
        )
        rows.append(
            [
                concept.id,
                concept.name,
                _fmt(disp),
                str(int((labels == pair.positive).sum())),
                str(int((labels == pair.negative).sum())),
                bundle.classes[pair.positive if disp > 0 else pair.negative],
            ]
        )
    _emit(
        rows,
        ["concept_id", "concept_name", "disparity", "n_positive", "n_negative", "biased_toward"],
        args.out,
        "disparity.csv",
    )
    return 0


def cmd_influence(args: argparse.Namespace) -> int:
    bundle = read_bundle(args.bundle)
    ws = prepare(bundle, _resolve_seed(args.seed))
    concepts = _load_concept_file(ws, args.concepts)
    pair = _parse_pair(bundle, args.pair)
    pred = head_mod.predict_batch(ws.head, ws.aligned_test, ws.test_labels)
    idx, cases = diagnosis.pair_subset(ws.test_labels, pred, pair)
    groups = {
        "FP": ([i for i, c in zip(idx, cases) if c.value == "FP"], pair.positive),
        "FN": ([i for i, c in zip(idx, cases) if c.value == "FN"], pair.negative),
    }
    rows = []
    for concept in concepts:
        for group, (members, k) in groups.items():
            if members:
                infl = head_mod.concept_influence(
                    ws.head, ws.aligned_test[members], concept.vector, k
                )
                pf, md = _fmt(infl.positive_fraction), _fmt(infl.mean_derivative)
            else:
                pf, md = "", ""
            rows.append([concept.id, concept.name, group, str(k), str(len(members)), pf, md])
    _emit(
        rows,
        ["concept_id", "concept_name", "group", "target_class", "size", "positive_fraction", "mean_derivative"],
        args.out,
        "influence.csv",
    )
    return 0


def _curve_rows(curve: debias_mod.DebiasCurve) -> list[list[str]]:
    rows = []
    for i, n in enumerate(curve.grid):
        rows.append(
            [
                str(n),
                _fmt(curve.rbr[i]),
                _fmt(curve.disparity_after[i]),
                _fmt(curve.accuracy_after[i]) if curve.accuracy_after else "",
                _fmt(curve.subgroup_after[i]) if curve.subgroup_after else "",
            ]
        )
    return rows


def cmd_curve(args: argparse.Namespace) -> int:
    bundle = read_bundle(args.bundle)
    ws = prepare(bundle, _resolve_seed(args.seed))
    concepts = _load_concept_file(ws, args.concepts)
    pair = _parse_pair(bundle, args.pair)
    concept = _find_concept(concepts, args.concept)
    curve = debias_mod.debias_curve(ws, concepts, concept.id, pair, evaluate=args.evaluate)
    _emit(
        _curve_rows(curve),
        ["n", "rbr", "disparity_after", "acc_after", "subgroup_after"],
        args.out,
        "curve.csv",
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    bundle = read_bundle(args.bundle)
    ws = prepare(bundle, _resolve_seed(args.seed))
    concepts = _load_concept_file(ws, args.concepts)
    pair = _parse_pair(bundle, args.pair)
    concept = _find_concept(concepts, args.concept)
    result = debias_mod.evaluate_debias(
        ws, concepts, concept.id, pair, args.n, control=args.control
    )
    rows = [
        [
            concept.id,
            concept.name,
            result.control or "ranked",
            str(result.n),
            _fmt(result.pct_bias_mitigated),
            _fmt(result.acc_before),
            _fmt(result.acc_after),
            _fmt(result.subgroup_before),
            _fmt(result.subgroup_after),
        ]
    ]
    _emit(
        rows,
        [
            "concept_id",
            "concept_name",
            "candidates",
            "n",
            "pct_bias_mitigated",
            "acc_before",
            "acc_after",
            "subgroup_before",
            "subgroup_after",
        ],
        args.out,
        "evaluate.csv",
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .bundle import load_bundle
    from .service import AnalysisSession, create_app

    bundle = load_bundle(args.bundle)
    session = AnalysisSession(bundle, _resolve_seed(args.seed))
    app = create_app(session)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escape",
        description="Detect, quantify, and mitigate spurious concept-class associations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("validate", cmd_validate, help="check a bundle directory")
    p.add_argument("bundle")

    p = add("synth", cmd_synth, help="generate a planted-bias bundle")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON file overriding generator fields")

    for name, fn in (("diagnose", cmd_diagnose),):
        p = add(name, fn, help="train the head and report confusion and unknown-unknowns")
        p.add_argument("bundle")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    for name, fn, needs_concept in (
        ("associate", cmd_associate, False),
        ("disparity", cmd_disparity, False),
        ("influence", cmd_influence, False),
        ("curve", cmd_curve, True),
        ("evaluate", cmd_evaluate, True),
    ):
        p = add(name, fn, help=f"compute the {name} report")
        p.add_argument("bundle")
        p.add_argument("--concepts", required=True, help="JSON list of {name, segment_ids}")
        p.add_argument("--pair", help="negative,positive class indices (default 0,1 for binary)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if needs_concept:
            p.add_argument("--concept", required=True, help="concept id or name")
        if name == "curve":
            p.add_argument("--evaluate", action="store_true")
        if name == "evaluate":
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--control", choices=["random"])

    p = add("serve", cmd_serve, help="run the analysis service")
    p.add_argument("--bundle", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--seed", type=int)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (BundleError, ValueError, KeyError, FileNotFoundError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
