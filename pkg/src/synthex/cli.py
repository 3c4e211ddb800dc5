"""Command-line interface.

Subcommands mirror the pipeline stages: ingest, detect, retrieve, extract,
resolve, normalize, eval, sweep, search, serve, llm. Gateways default to
replay mode when a cassette is given, so batch runs are reproducible offline.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod, detector, normalize, pipeline
from .evalkit import EvalHarness, score_run, write_plot_table, write_reports_json
from .extractor import ExtractionConfig, ExtractionResult, Extractor
from .llmgate import Cassette, Gateway, HttpTransport, ReplayTransport
from .promptkit import OrderingStrategy, ShotOrdering, default_template
from .records import SynthesisRecord
from .retrieval import (
    DemonstrationPool,
    HashEmbeddingProvider,
    bm25_scorer,
    build_index,
    dense_scorer,
    random_select,
    top_k,
)
from .searchql import QuerySyntaxError, parse as parse_query, search
from .store import Store


def _gateway(args: argparse.Namespace) -> Gateway:
    if getattr(args, "cassette", None):
        return Gateway(ReplayTransport(Cassette.load(args.cassette)))
    if getattr(args, "base_url", None):
        return Gateway(HttpTransport(base_url=args.base_url))
    raise SystemExit("provide --cassette for replay mode or --base-url for a live provider")


def _load_pool(path: str) -> DemonstrationPool:
    return pipeline.load_pool(path)


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args: argparse.Namespace) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        corpus = corpus_mod.ingest(fh)
    store = Store(args.out)
    for doc in corpus.documents:
        store.put(
            "documents",
            doc.doi,
            {
                "doi": doc.doi,
                "mof_ids": list(doc.mof_ids),
                "title": doc.title,
                "body": doc.body,
                "paragraph_ids": [p.id for p in doc.paragraphs],
            },
        )
        for p in doc.paragraphs:
            store.put(
                "paragraphs",
                p.id,
                {
                    "id": p.id,
                    "doc_doi": p.doc_doi,
                    "index": p.index,
                    "text": p.text,
                    "char_span": list(p.char_span),
                },
            )
    labels = None
    if args.detector_model:
        model = detector.DetectorModel.load(args.detector_model)
        labels = detector.label_corpus(model, corpus.paragraphs())
        _, stats = corpus_mod.apply_pipeline_filters(corpus, labels)
        report = corpus_mod.funnel_report(corpus, stats)
    else:
        report = {
            "stats": None,
            "rejects": [{"line": r.line_no, "reason": r.reason} for r in corpus.rejects],
            "warnings": [{"doi": w.doi, "message": w.message} for w in corpus.warnings],
        }
    _write_json(report, args.report)
    print(f"ingested {len(corpus.documents)} documents, {len(corpus.rejects)} rejects")
    return 0


def cmd_detect_train(args: argparse.Namespace) -> int:
    samples = pipeline.load_labeled_samples(args.samples)
    model, metrics = detector.train_stratified_cv(samples, folds=args.folds)
    model.save(args.out)
    for m in metrics:
        print(
            f"fold {m.fold_index}: acc={m.accuracy:.4f} precision={m.precision:.4f} "
            f"recall={m.recall:.4f} f1={m.f1:.4f}"
        )
    mean_f1 = sum(m.f1 for m in metrics) / len(metrics)
    print(f"mean f1: {mean_f1:.4f}; model saved to {args.out}")
    return 0


def cmd_detect_run(args: argparse.Namespace) -> int:
    model = detector.DetectorModel.load(args.model)
    store = Store(args.corpus)
    labels = {}
    for pid, raw in store.items("paragraphs"):
        score, label = detector.classify(model, raw["text"])
        labels[pid] = {"score": score, "label": label}
    _write_json({"labels": labels}, args.out)
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    pool = _load_pool(args.pool)
    query = pool.get(args.query_id).paragraph if args.query_id else args.query_text
    exclude = args.query_id
    if args.algo == "bm25":
        scorer = bm25_scorer(build_index(pool))
        ranked = top_k(scorer, pool, query, args.k, exclude_id=exclude)
    elif args.algo == "dense":
        scorer = dense_scorer(HashEmbeddingProvider(), pool)
        ranked = top_k(scorer, pool, query, args.k, exclude_id=exclude)
    else:
        ranked = random_select(pool, args.k, seed=args.seed, exclude_id=exclude)
    for s in ranked:
        print(f"{s.rank}\t{s.demo_id}\t{s.score:.6f}")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    from .promptkit import load_template

    gateway = _gateway(args)
    pool = _load_pool(args.pool) if args.pool else None
    scorer = bm25_scorer(build_index(pool)) if pool else None
    template = load_template(args.template) if args.template else default_template()
    if args.no_knowledge:
        template = template.without_knowledge()
    extractor = Extractor(gateway, template, pool=pool, scorer=scorer)
    if args.mode == "zero":
        config = ExtractionConfig.zero_shot(model=args.model)
    else:
        config = ExtractionConfig.few_shot(k=args.k, algo=args.algo, model=args.model)
    store = Store(args.corpus)
    items = [(pid, raw["text"]) for pid, raw in store.items("paragraphs")]
    if args.labels:
        # Apply the dataset funnel: keep paragraphs from documents with exactly
        # one MOF id and exactly one detector-positive paragraph.
        labels = json.loads(Path(args.labels).read_text(encoding="utf-8"))["labels"]
        positive_by_doc: dict[str, list[str]] = {}
        for pid, raw in store.items("paragraphs"):
            if labels.get(pid, {}).get("label"):
                positive_by_doc.setdefault(raw["doc_doi"], []).append(pid)
        keep = set()
        for doi, positives in positive_by_doc.items():
            doc = store.require("documents", doi)
            if len(doc["mof_ids"]) == 1 and len(positives) == 1:
                keep.add(positives[0])
        items = [(pid, text) for pid, text in items if pid in keep]
    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8") as fh:
        for pid, text in items:
            result = extractor.extract(text, pid, config)
            fh.write(json.dumps(result.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    print(f"extracted {len(items)} paragraphs -> {out_path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gold_pool = _load_pool(args.gold)
    gold = {d.id: d.gold for d in gold_pool.entries}
    results = []
    with open(args.results, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            results.append(
                ExtractionResult(
                    paragraph_id=raw["paragraph_id"],
                    record=SynthesisRecord.from_dict(raw.get("resolved_record") or raw["record"]),
                    mode=raw["mode"],
                    k=raw["k"],
                    algo=raw["algo"],
                    shot_ids=tuple(raw["shot_ids"]),
                    raw_text=raw["raw_text"],
                    prompt_fingerprint=raw["prompt_fingerprint"],
                    diagnostics=tuple(raw.get("diagnostics", [])),
                    unparseable=raw.get("unparseable", False),
                )
            )
    matrix, metrics = score_run(results, gold)
    _write_json(
        {"confusion_matrix": matrix.to_dict(), "metrics": metrics.to_dict()}, args.out
    )
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    store = Store(args.db)
    rows = []
    for pid, raw in store.items("records"):
        mapping = dict(raw["record"])
        mapping["title"] = raw.get("title", "")
        mapping["paragraph"] = raw.get("paragraph", "")
        mapping["doi"] = raw.get("doi", "")
        rows.append((pid, mapping))
    try:
        ast = parse_query(args.query)
    except QuerySyntaxError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    hits, total = search(rows, ast, limit=args.limit, offset=args.offset)
    print(f"{total} match(es)")
    for hit in hits:
        print(f"{hit.record_id}\t{','.join(hit.matched_fields)}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    store = Store(args.db)
    gateway = _gateway(args)
    app = create_app(store, gateway, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_llm_ping(args: argparse.Namespace) -> int:
    gateway = _gateway(args)
    ok = gateway.ping()
    print("ok" if ok else "no response")
    return 0 if ok else 1


def cmd_normalize(args: argparse.Namespace) -> int:
    gateway = _gateway(args)
    records = []
    with open(args.results, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            rec = raw.get("resolved_record") or raw["record"]
            records.append((raw["paragraph_id"], SynthesisRecord.from_dict(rec)))

    cleaned = []
    for pid, record in records:
        changes = {
            slot: (normalize.clean_special_chars(v) or None)
            for slot, v in record.to_dict().items()
            if v is not None
        }
        cleaned.append((pid, SynthesisRecord(**changes)))

    maps = {}
    for category, getter in (
        ("metal", lambda r: r.metal_precursor_name),
        ("linker", lambda r: r.organic_linker_name),
        ("solvent", lambda r: r.solvent_name),
    ):
        values = [getter(r) for _, r in cleaned if getter(r)]
        seeded = normalize.cluster_by_threshold(values)
        seeded_map = normalize.CanonicalMap.from_clusters(seeded)
        clusters, _ = normalize.merge_synonyms_llm(
            [seeded_map.canonical(v) for v in values], category, gateway
        )
        llm_map = normalize.CanonicalMap.from_clusters(clusters)
        combined = {raw_name: llm_map.canonical(c) for raw_name, c in seeded_map.mapping.items()}
        maps[category] = normalize.CanonicalMap(mapping=combined, clusters=list(clusters))

    canonical = [(pid, normalize.apply_canonical_map(r, maps)) for pid, r in cleaned]
    cutoffs = normalize.FrequencyFilter(*args.filter)
    kept, _ = normalize.apply_frequency_filter(canonical, cutoffs)
    manifest = normalize.export_features(kept, args.export, str(args.export) + ".manifest.json")
    print(f"kept {manifest['rows']} records; features -> {args.export}")
    return 0


def cmd_resolve(args: argparse.Namespace) -> int:
    from . import coref

    gateway = _gateway(args)
    store = Store(args.corpus)
    report = coref.ResolutionReport()
    out_lines = []
    with open(args.results, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            record = SynthesisRecord.from_dict(raw["record"])
            pid = raw["paragraph_id"]
            paragraph = store.require("paragraphs", pid)
            doc_raw = store.require("documents", paragraph["doc_doi"])
            doc = corpus_mod.ingest(
                iter([json.dumps({k: doc_raw[k] for k in ("doi", "mof_ids", "title", "body")})])
            ).documents[0]
            proxies = (
                coref.detect_proxies(record.organic_linker_name)
                if record.organic_linker_name
                else []
            )
            if proxies:
                table = coref.harvest_anaphors(doc, paragraph["index"], gateway)
            else:
                table = coref.AnaphorTable(doc.doi, {})
            resolved, unresolved = coref.resolve(record, table)
            report.observe(proxies, unresolved)
            raw["resolved_record"] = resolved.to_dict()
            out_lines.append(json.dumps(raw, sort_keys=True, ensure_ascii=False))
    Path(args.out).write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    _write_json(report.to_dict(), args.report)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    gateway = _gateway(args)
    pool = _load_pool(args.pool)
    template = default_template()

    def make_extractor(active_pool: DemonstrationPool) -> Extractor:
        scorer = bm25_scorer(build_index(active_pool)) if active_pool.n else None
        return Extractor(gateway, template, pool=active_pool, scorer=scorer)

    queries = [(d.id, d.paragraph) for d in pool.entries]
    gold = {d.id: d.gold for d in pool.entries}
    harness = EvalHarness(make_extractor, pool, queries, gold)

    if args.what == "k":
        reports = harness.sweep_k([int(v) for v in args.values], trials=args.trials)
    elif args.what == "pool":
        reports = harness.sweep_pool_size(
            [int(v) for v in args.values], trials=args.trials, k=args.k
        )
    else:
        orderings = [
            ShotOrdering(OrderingStrategy(v), seed=args.seed if v == "random" else None)
            for v in args.values
        ]
        reports = [r for r, _ in harness.compare_orderings(orderings, k=args.k)]
    write_reports_json(reports, args.out)
    if args.table:
        write_plot_table(reports, args.table)
    print(f"wrote {len(reports)} report(s) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthex")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest a JSONL corpus into a store")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="store file (corpus.db)")
    p.add_argument("--report", default=None, help="funnel report JSON (stdout if omitted)")
    p.add_argument("--detector-model", default=None, help="apply filters with this model")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("detect", help="train or run the paragraph detector")
    dsub = p.add_subparsers(dest="detect_command", required=True)
    pt = dsub.add_parser("train")
    pt.add_argument("--samples", required=True)
    pt.add_argument("--folds", type=int, default=5)
    pt.add_argument("--out", required=True)
    pt.set_defaults(fn=cmd_detect_train)
    pr = dsub.add_parser("run")
    pr.add_argument("--model", required=True)
    pr.add_argument("--corpus", required=True)
    pr.add_argument("--out", default=None)
    pr.set_defaults(fn=cmd_detect_run)

    p = sub.add_parser("retrieve", help="rank demonstrations for a query")
    p.add_argument("--algo", choices=["bm25", "dense", "random"], default="bm25")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--pool", required=True)
    p.add_argument("--query-id", default=None)
    p.add_argument("--query-text", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_retrieve)

    p = sub.add_parser("extract", help="run extraction over a corpus store")
    p.add_argument("--mode", choices=["zero", "few"], default="few")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--algo", choices=["bm25", "dense", "random"], default="bm25")
    p.add_argument("--model", default="gpt-4-turbo")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pool", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default=None, help="detect-run output; extract positives only")
    p.add_argument("--template", default=None, help="prompt template file")
    p.add_argument(
        "--no-knowledge",
        action="store_true",
        help="ablation: drop background definitions and constraints from the prompt",
    )
    p.add_argument("--cassette", default=None)
    p.add_argument("--base-url", default=None)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("resolve", help="coreference-resolve linker proxies")
    p.add_argument("--results", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--cassette", default=None)
    p.add_argument("--base-url", default=None)
    p.set_defaults(fn=cmd_resolve)

    p = sub.add_parser("normalize", help="post-process and export features")
    p.add_argument("--results", required=True)
    p.add_argument(
        "--filter",
        type=lambda s: tuple(int(x) for x in s.split(",")),
        default=normalize.DEFAULT_FREQUENCY_FILTER,
        help="metal,linker,solvent top-N cutoffs (default 100,135,20)",
    )
    p.add_argument("--export", required=True)
    p.add_argument("--cassette", default=None)
    p.add_argument("--base-url", default=None)
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("eval", help="score results against gold")
    p.add_argument("--gold", required=True, help="gold pool JSONL")
    p.add_argument("--results", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="k / pool / ordering experiment sweeps")
    p.add_argument("what", choices=["k", "pool", "ordering"])
    p.add_argument("--values", nargs="+", required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--table", default=None)
    p.add_argument("--cassette", default=None)
    p.add_argument("--base-url", default=None)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("search", help="query the results database")
    p.add_argument("query")
    p.add_argument("--db", required=True)
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--offset", type=int, default=0)
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--db", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--frontend", default=None, help="built frontend directory for /app")
    p.add_argument("--cassette", default=None)
    p.add_argument("--base-url", default=None)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("llm", help="LLM gateway utilities")
    lsub = p.add_subparsers(dest="llm_command", required=True)
    lp = lsub.add_parser("ping")
    lp.add_argument("--cassette", default=None)
    lp.add_argument("--base-url", default=None)
    lp.set_defaults(fn=cmd_llm_ping)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
