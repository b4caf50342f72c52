"""Single entry point orchestrating the pipeline end to end.

Subcommands: ingest, synthesize, sample, evaluate, probe, mesh, report.
Exit codes: 0 ok, 1 usage, 2 input format, 3 external-scorer failure.
Logs are structured JSONL on stderr; artifacts embed deterministic run
manifests (timings stay in the log).
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import shlex
import subprocess
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bridge as bridge_mod
from . import corpus, graph, harness, mesh, report, synthesis
from . import lexicon as lexicon_mod
from .manifest import RunManifest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_SCORER = 3

DEFAULT_CONFIG = {
    "window_span_days": 3,
    "min_articles": 15,
    "min_predicates": 15,
    "min_argpairs": 30,
    "max_span_len": 4,
    "synset_strategy": "first",
    "hyponym_transitive": False,
    "bucket_boundaries": list(synthesis.DEFAULT_BUCKET_BOUNDARIES),
    "bucket_slack": 2,
    "max_negatives": 2,
    "seed": 0,
    "target_positives": 1000,
    "boundary_date": "",
    "evidence_cap": 3200,
    "retrieval_mode": "relation",
    "tfidf_k": 5,
    "language": "en",
    "bridge_batch": 64,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def log_event(event: str, **fields) -> None:
    record = {"ts": time.time(), "event": event, **fields}
    print(json.dumps(record, ensure_ascii=False), file=sys.stderr)


def load_config(path: Optional[str]) -> dict:
    config = dict(DEFAULT_CONFIG)
    if path:
        with open(path, "rb") as fh:
            loaded = tomllib.load(fh)
        unknown = set(loaded) - set(DEFAULT_CONFIG)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    return config


def _load_lexicon(path: str, max_span_len: int) -> lexicon_mod.Lexicon:
    p = Path(path)
    if p.is_dir():
        return lexicon_mod.from_wordnet(p, max_span_len=max_span_len)
    return lexicon_mod.from_json(p, max_span_len=max_span_len)


# -- subcommands ----------------------------------------------------------


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    span = args.span or config["window_span_days"]
    excluded = []
    if args.exclude_articles:
        excluded = [
            line.strip()
            for line in Path(args.exclude_articles).read_text(encoding="utf8").splitlines()
            if line.strip()
        ]
    t0 = time.time()
    store = corpus.ingest_files(args.articles, args.triples, span, excluded)
    store.save(args.out)
    manifest = RunManifest.build(
        {"span_days": span}, seed=0,
        inputs={"articles": args.articles, "triples": args.triples},
    )
    manifest.write(Path(args.out) / "run-manifest.json")
    log_event(
        "ingest", articles=len(store.articles), triples=len(store.triples()),
        windows=len(store.windows), rejected=len(store.rejected),
        seconds=round(time.time() - t0, 3),
    )
    for rej in store.rejected[:20]:
        log_event("rejected_record", kind=rej.kind, reason=rej.reason)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    config = load_config(args.config)
    store = corpus.load(args.store)
    lex = _load_lexicon(args.lexicon, config["max_span_len"])
    t0 = time.time()
    bundles = synthesis.build_population(
        store,
        lex,
        min_articles=config["min_articles"],
        min_predicates=config["min_predicates"],
        min_argpairs=config["min_argpairs"],
        synset_strategy=config["synset_strategy"],
        hyponym_transitive=config["hyponym_transitive"],
        seed=config["seed"],
    )
    dataset = synthesis.Dataset(bundles=bundles)
    out = Path(args.out)
    dataset.to_jsonl(out)
    manifest = RunManifest.build(
        config, seed=config["seed"],
        inputs={"store": Path(args.store) / "triples.jsonl",
                "lexicon": args.lexicon},
    )
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    log_event(
        "synthesize", bundles=len(bundles),
        positives=len(dataset.positives()), negatives=len(dataset.negatives()),
        seconds=round(time.time() - t0, 3),
    )
    return EXIT_OK


def cmd_sample(args) -> int:
    config = load_config(args.config)
    store = corpus.load(args.store) if args.store else None
    population = synthesis.Dataset.from_jsonl(args.population)
    target = args.target if args.target is not None else config["target_positives"]
    window_weights = None
    if store is not None:
        window_weights = {
            wid: float(len(w.article_ids)) for wid, w in store.windows.items()
        }
    t0 = time.time()
    sampled = synthesis.sample_dataset(
        population.bundles,
        target_positive_count=target,
        bucket_boundaries=config["bucket_boundaries"],
        seed=config["seed"],
        window_weights=window_weights,
        bucket_slack=config["bucket_slack"],
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.build(
        config, seed=config["seed"], inputs={"population": args.population}
    )
    if config["boundary_date"]:
        boundary = dt.date.fromisoformat(str(config["boundary_date"]))
        dev, test = synthesis.split_by_time(sampled, boundary)
        dev.to_jsonl(out_dir / "dev.jsonl")
        test.to_jsonl(out_dir / "test.jsonl")
        log_event("split", dev_bundles=len(dev.bundles), test_bundles=len(test.bundles))
    sampled.to_jsonl(out_dir / "dataset.jsonl")
    manifest.write(out_dir / "dataset.jsonl.manifest.json")
    for diag in sampled.diagnostics:
        log_event("sample_warning", message=diag)
    if args.audit_size:
        assigner = _type_assigner(args.types)
        rows = synthesis.audit_sample(
            sampled, args.audit_size, assigner, seed=config["seed"]
        )
        with open(out_dir / "audit-sample.jsonl", "w", encoding="utf8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    log_event(
        "sample", bundles=len(sampled.bundles),
        positives=len(sampled.positives()), negatives=len(sampled.negatives()),
        seconds=round(time.time() - t0, 3),
    )
    return EXIT_OK


def _type_assigner(types_path: Optional[str]) -> mesh.TypeAssigner:
    if not types_path:
        return mesh.StaticTypeAssigner({})
    mapping = json.loads(Path(types_path).read_text(encoding="utf8"))
    return mesh.StaticTypeAssigner(
        {str(k).casefold(): str(v) for k, v in mapping.items()}
    )


def _build_scorer(args, config) -> harness.Scorer:
    if args.scorer == "constant":
        return harness.ConstantScorer(args.constant)
    if args.scorer == "eg":
        if not args.graph_dir:
            raise UsageError("--scorer eg requires --graph-dir")
        g = graph.EntailmentGraph.load(args.graph_dir, lazy=args.lazy_graph)
        stats = g.stats()
        if stats["empty"]:
            log_event("graph_warning", message="graph has no edges")
        log_event("graph_loaded", nodes=stats["nodes"], edges=stats["edges"])
        return graph.as_scorer(g, fuzzy=args.fuzzy)
    if args.scorer == "bridge":
        if args.bridge_tcp:
            host, _, port = args.bridge_tcp.partition(":")
            client = bridge_mod.BridgeClient.tcp(host, int(port))
        elif args.bridge_cmd:
            client = bridge_mod.BridgeClient.stdio(shlex.split(args.bridge_cmd))
        else:
            raise UsageError("--scorer bridge requires --bridge-cmd or --bridge-tcp")
        return bridge_mod.BridgeScorer(
            client, batch_size=config["bridge_batch"]
        )
    raise UsageError(f"unknown scorer: {args.scorer!r}")


def _validate_scorer_args(args) -> None:
    if args.scorer == "eg" and not args.graph_dir:
        raise UsageError("--scorer eg requires --graph-dir")
    if args.scorer == "bridge" and not (args.bridge_cmd or args.bridge_tcp):
        raise UsageError("--scorer bridge requires --bridge-cmd or --bridge-tcp")


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    _validate_scorer_args(args)
    store = corpus.load(args.store)
    dataset = synthesis.Dataset.from_jsonl(args.dataset)
    eval_config = harness.EvalConfig(
        evidence_cap=args.cap or config["evidence_cap"],
        retrieval_mode=args.retrieval or config["retrieval_mode"],
        tfidf_k=args.tfidf_k or config["tfidf_k"],
        exclude_sources=not args.no_exclusion,
        jobs=args.jobs,
    )
    scorer = _build_scorer(args, config)
    t0 = time.time()
    try:
        result = harness.run_eval(store, dataset, scorer, eval_config)
    finally:
        scorer.close()
    manifest = RunManifest.build(
        {**config, "retrieval": eval_config.retrieval_mode,
         "cap": eval_config.evidence_cap},
        seed=config["seed"],
        inputs={"dataset": args.dataset},
    )
    payload = {"manifest": manifest.to_dict(), **result.to_dict()}
    Path(args.out).write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf8",
    )
    log_event(
        "evaluate", scorer=scorer.name, coverage=result.coverage,
        auc_norm=result.report.auc_norm if result.report else None,
        seconds=round(time.time() - t0, 3),
    )
    return EXIT_OK


def cmd_mesh(args) -> int:
    config = load_config(args.config)
    pairs: list[mesh.EntailmentPair] = []
    for split, path in (("train", args.train), ("dev", args.dev), ("test", args.test)):
        if path:
            pairs.extend(mesh.read_pairs_tsv(path, split))
    if not pairs:
        raise UsageError("mesh needs at least one of --train/--dev/--test")
    linked, unpaired = mesh.link_converses(pairs)
    linked = mesh.fix_split_leakage(linked, seed=config["seed"])
    groups = mesh.classify_subgroups(linked)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mesh.emit_subsets(out_dir, linked, groups)
    counts = mesh.subgroup_counts(linked, groups)
    (out_dir / "subgroup-counts.json").write_text(
        json.dumps(counts, sort_keys=True, indent=2) + "\n", encoding="utf8"
    )
    log_event(
        "mesh", pairs=len(linked), unpaired=len(unpaired), counts=counts,
    )
    return EXIT_OK


def cmd_probe(args) -> int:
    config = load_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    language = args.language or config["language"]
    assigner = _type_assigner(args.types)
    entries: list[dict] = []
    if args.subset:
        with open(args.subset, encoding="utf8") as fh:
            for line in fh:
                if line.strip():
                    entries.append(json.loads(line))
        pairs = [
            mesh.EntailmentPair(
                pair_id=str(e.get("pair_id", i)),
                premise=e["premise"],
                hypothesis=e["hypothesis"],
                label=int(e["label"]),
                split=str(e.get("split", "dev")),
            )
            for i, e in enumerate(entries)
        ]
    elif args.dataset:
        dataset = synthesis.Dataset.from_jsonl(args.dataset)
        pairs = []
        diagnostics: list[str] = []
        for prop in dataset.propositions():
            masked = mesh.mask_arguments(prop, assigner, diagnostics)
            pairs.append(
                mesh.EntailmentPair(
                    pair_id=prop.prop_id,
                    premise="",
                    hypothesis=masked.text,
                    label=1 if prop.label == synthesis.POSITIVE else 0,
                    split="dev",
                )
            )
    else:
        raise UsageError("probe needs --subset or --dataset")
    transformed = [mesh.honly_transform(p, language) for p in pairs]
    diagnostics: list[str] = []
    train, dev2 = mesh.subsplit_dev(
        transformed,
        target_sizes=tuple(args.subsplit) if args.subsplit else mesh.DEFAULT_SUBSPLIT_SIZES,
        seed=config["seed"],
        diagnostics=diagnostics,
    )
    for name, split_pairs in (("train", train), ("dev2", dev2)):
        with open(out_dir / f"honly-{name}.jsonl", "w", encoding="utf8") as fh:
            for p in split_pairs:
                fh.write(
                    json.dumps(
                        {
                            "pair_id": p.pair_id,
                            "premise": p.premise,
                            "hypothesis": p.hypothesis,
                            "label": p.label,
                            "split": p.split,
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    + "\n"
                )
    for diag in diagnostics:
        log_event("probe_warning", message=diag)
    log_event("probe", train=len(train), dev2=len(dev2), language=language)
    if args.trainer_cmd:
        command = shlex.split(args.trainer_cmd) + [
            "--subset", str(out_dir / "honly-train.jsonl"),
            "--dev", str(out_dir / "honly-dev2.jsonl"),
            "--out", str(out_dir / "checkpoint"),
        ]
        log_event("trainer_start", command=command)
        proc = subprocess.run(command)
        if proc.returncode != 0:
            raise bridge_mod.BridgeError(
                f"trainer exited with {proc.returncode}"
            )
        log_event("trainer_done")
    return EXIT_OK


def cmd_report(args) -> int:
    results = {}
    for path in args.results:
        name = Path(path).stem
        results[name] = report.load_result_json(path)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_summary_csv(results, out_dir / "summary.csv")
    for name, payload in results.items():
        if payload.get("report"):
            report.write_curve_csv(payload["report"], out_dir / f"{name}-curve.csv")
    report.plot_pr_curves(results, out_dir / "pr-curves.png")
    print(report.render_table(results))
    log_event("report", outputs=str(out_dir), results=len(results))
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="entailbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest articles and triples into an index")
    p.add_argument("--articles", required=True)
    p.add_argument("--triples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--span", type=int, default=None, help="window span in days")
    p.add_argument("--exclude-articles", default=None,
                   help="file with article ids to drop, one per line")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synthesize", help="build the positive/negative population")
    p.add_argument("--config", default=None)
    p.add_argument("--store", required=True)
    p.add_argument("--lexicon", required=True,
                   help="JSON lexicon file or WordNet directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("sample", help="bucket-matched bundle sampling and time split")
    p.add_argument("--config", default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--population", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--audit-size", type=int, default=0)
    p.add_argument("--types", default=None, help="gazetteer JSON for audit masking")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="score a dataset with a pluggable scorer")
    p.add_argument("--config", default=None)
    p.add_argument("--store", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scorer", required=True, choices=["eg", "bridge", "constant"])
    p.add_argument("--graph-dir", default=None)
    p.add_argument("--fuzzy", action="store_true")
    p.add_argument("--lazy-graph", action="store_true")
    p.add_argument("--constant", type=float, default=0.5)
    p.add_argument("--bridge-cmd", default=None)
    p.add_argument("--bridge-tcp", default=None, help="host:port")
    p.add_argument("--retrieval", choices=list(harness.RETRIEVAL_MODES), default=None)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--tfidf-k", type=int, default=None)
    p.add_argument("--no-exclusion", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("mesh", help="sub-group classification and subset emission")
    p.add_argument("--config", default=None)
    p.add_argument("--train", default=None)
    p.add_argument("--dev", default=None)
    p.add_argument("--test", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("probe", help="hypothesis-only pipeline")
    p.add_argument("--config", default=None)
    p.add_argument("--subset", default=None, help="mesh subset JSONL")
    p.add_argument("--dataset", default=None, help="benchmark dataset JSONL")
    p.add_argument("--types", default=None, help="gazetteer JSON for masking")
    p.add_argument("--language", default=None)
    p.add_argument("--subsplit", type=int, nargs=2, default=None,
                   metavar=("TRAIN", "DEV2"))
    p.add_argument("--trainer-cmd", default=None,
                   help="external trainer; gets --subset/--dev/--out appended")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("report", help="render result JSON to CSV, table, figures")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except bridge_mod.BridgeError as exc:
        print(f"scorer failure: {exc}", file=sys.stderr)
        return EXIT_SCORER
    except (
        corpus.CorpusError,
        synthesis.SynthesisError,
        lexicon_mod.LexiconError,
        graph.GraphError,
        mesh.MeshError,
        harness.HarnessError,
        json.JSONDecodeError,
        tomllib.TOMLDecodeError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
