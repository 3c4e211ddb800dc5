"""Acceptance suite: one test per criterion, each at its stated tolerance.

The conftest hook prints one PASS/FAIL line per criterion after the run.
Criteria 1-12 cover the core library; criterion 13 drives the curation loop
through the HTTP surface the browser app consumes.
"""

import json
import random
import string
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from synthex import pipeline
from synthex.curation import agreement_merge, jaccard
from synthex.evalkit import EvalHarness, score_run
from synthex.extractor import ExtractionResult, Extractor
from synthex.llmgate import Cassette, ChatResponse, Gateway, MockTransport, ReplayTransport, UsageLedger
from synthex.normalize import (
    cluster_by_threshold,
    levenshtein,
    similarity_ratio,
    standardize_temperature,
    standardize_time,
)
from synthex.coref import detect_proxies, harvest_anaphors, resolve, ResolutionReport
from synthex.corpus import ingest
from synthex.detector import stratified_folds, train_stratified_cv
from synthex.promptkit import default_template, record_to_completion
from synthex.records import SLOTS, SynthesisRecord
from synthex.retrieval import bm25_scorer, build_index
from synthex.searchql import And, Or, TextTerm, evaluate, format_query, parse, search
from synthex.server import create_app
from synthex.store import Store

from mockllm import GradedMockModel, make_harness_pool
from test_retrieval import brute_force_rank, make_pool
from test_searchql import make_rows, random_ast

FIXTURES = Path(__file__).parent / "fixtures"


# --- criterion 1 -------------------------------------------------------------------


def test_c01_bm25_oracle_equivalence():
    """top_k equals brute-force rescoring on 200 random corpora; 3-doc example to 1e-9."""
    start = time.perf_counter()

    pool = make_pool(["dmf dmf water", "water ethanol", "dmf"])
    index = build_index(pool)
    from synthex.retrieval import bm25_score
    from synthex.textutil import tokenize

    d1 = bm25_score(index, tokenize("dmf"), "d1")
    d2 = bm25_score(index, tokenize("dmf"), "d2")
    d3 = bm25_score(index, tokenize("dmf"), "d3")
    assert abs(d1 - 0.5784660052255207) <= 1e-9
    assert abs(d3 - 0.6064562958009492) <= 1e-9
    assert d2 == 0.0
    assert d3 > d1 > d2

    rng = random.Random(1234)
    vocab = list(string.ascii_lowercase[:6])
    for _ in range(200):
        n_docs = rng.randint(1, 8)
        texts = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12))) for _ in range(n_docs)]
        toy = make_pool(texts)
        toy_index = build_index(toy)
        query = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 5)))
        k = rng.randint(0, n_docs + 2)
        exclude = rng.choice([None, f"d{rng.randint(1, n_docs)}"])
        expected = brute_force_rank(toy_index, tokenize(query), exclude)[:k]
        from synthex.retrieval import top_k

        got = top_k(bm25_scorer(toy_index), toy, query, k, exclude_id=exclude)
        assert [(g.score, g.demo_id) for g in got] == expected

    assert time.perf_counter() - start < 5.0


# --- criterion 2 -------------------------------------------------------------------


def test_c02_levenshtein_oracle_equivalence():
    """similarity_ratio agrees with an independent DP oracle; Cd pair at 92.31 +- 0.01."""
    from test_normalize import dp_oracle

    start = time.perf_counter()
    ratio = similarity_ratio("Cd(NO3)2.4H2O", "Cd(NO3)2?4H2O")
    assert abs(ratio - 92.31) <= 0.01
    clusters = cluster_by_threshold(["Cd(NO3)2.4H2O", "Cd(NO3)2?4H2O"], threshold=90)
    assert len(clusters) == 1  # above threshold: same cluster

    rng = random.Random(4321)
    alphabet = string.ascii_lowercase + "0123456789().,?"
    for _ in range(1000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        assert levenshtein(a, b) == dp_oracle(a, b)
    assert time.perf_counter() - start < 2.0


# --- criterion 3 -------------------------------------------------------------------


def _result(pid, record):
    return ExtractionResult(
        paragraph_id=pid, record=record, mode="zero", k=0, algo="none",
        shot_ids=(), raw_text="", prompt_fingerprint="fp",
    )


def test_c03_metric_correctness():
    """Hand-counted fixture scores exactly; totals = paragraphs x 10 on 100 fixtures."""
    gold_values = {slot: f"v{i}" for i, slot in enumerate(SLOTS[:9])}
    gold = SynthesisRecord(**gold_values)
    predicted_values = dict(gold_values)
    del predicted_values[SLOTS[7]]
    predicted_values[SLOTS[8]] = "wrong"
    matrix, metrics = score_run([_result("p", SynthesisRecord(**predicted_values))], {"p": gold})
    assert (matrix.tp, matrix.fn, matrix.fp, matrix.tn) == (7, 1, 1, 1)
    assert metrics.precision == 0.875
    assert metrics.recall == 0.875
    assert metrics.f1 == 0.875
    assert metrics.acc == 0.8

    rng = random.Random(77)
    for _ in range(100):
        n = rng.randint(1, 8)
        gold_map, results = {}, []
        for i in range(n):
            make = lambda: {
                s: (f"v{rng.randint(0, 2)}" if rng.random() < 0.6 else None) for s in SLOTS
            }
            gold_map[f"p{i}"] = SynthesisRecord(**make())
            results.append(_result(f"p{i}", SynthesisRecord(**make())))
        matrix, _ = score_run(results, gold_map)
        assert matrix.total == n * 10


# --- criterion 4 -------------------------------------------------------------------


def test_c04_end_to_end_replay_determinism(tmp_path):
    """Full pipeline over the 12-paragraph corpus: byte-identical across 3 runs."""
    artifacts = ("results.jsonl", "report.json", "features.csv", "features.manifest.json")
    digests = []
    for i in range(3):
        out = tmp_path / f"run{i}"
        gateway = Gateway(ReplayTransport(Cassette.load(FIXTURES / "cassette_e2e.jsonl")))
        outcome = pipeline.run_pipeline(
            corpus_lines=(FIXTURES / "corpus12.jsonl").read_text(encoding="utf-8").splitlines(),
            labeled_samples=pipeline.load_labeled_samples(FIXTURES / "labeled.jsonl"),
            pool=pipeline.load_pool(FIXTURES / "pool.jsonl"),
            gateway=gateway,
            out_dir=out,
        )
        assert len(outcome.results) == 12
        digests.append({name: (out / name).read_bytes() for name in artifacts})
    assert digests[0] == digests[1] == digests[2]


# --- criterion 5 -------------------------------------------------------------------


@pytest.fixture
def graded_harness():
    pool = make_harness_pool(10)
    model = GradedMockModel(pool)

    def make_extractor(active_pool):
        scorer = bm25_scorer(build_index(active_pool)) if active_pool.n else None
        return Extractor(Gateway(MockTransport(model)), default_template(), pool=active_pool, scorer=scorer)

    queries = [(d.id, d.paragraph) for d in pool.entries]
    gold = {d.id: d.gold for d in pool.entries}
    return EvalHarness(make_extractor, pool, queries, gold)


def test_c05_harness_wiring(graded_harness):
    """F1(K=4) > F1(K=1) > F1(K=0) under the graded mock; pool size 0 has CI 0."""
    reports = graded_harness.sweep_k([0, 1, 4])
    f1 = {r.config["k"]: r.mean["f1"] for r in reports}
    assert f1[4] > f1[1] > f1[0]

    size_zero = graded_harness.sweep_pool_size([0], trials=5)[0]
    assert size_zero.ci_half_width["f1"] == 0.0
    assert size_zero.ci_half_width["acc"] == 0.0


# --- criterion 6 -------------------------------------------------------------------


def test_c06_self_exclusion_and_determinism():
    """No query ever sees itself among its shots; fixed seeds reproduce runs."""
    pool = pipeline.load_pool(FIXTURES / "pool.jsonl")
    scorer = bm25_scorer(build_index(pool))
    from synthex.retrieval import random_select, top_k

    for demo in pool.entries:
        for k in (1, 4, pool.n):
            ranked = top_k(scorer, pool, demo.paragraph, k, exclude_id=demo.id)
            assert demo.id not in [s.demo_id for s in ranked]
            sampled = random_select(pool, k, seed=100, exclude_id=demo.id)
            assert demo.id not in [s.demo_id for s in sampled]
            assert random_select(pool, k, seed=100, exclude_id=demo.id) == sampled
        again = top_k(scorer, pool, demo.paragraph, 4, exclude_id=demo.id)
        assert again == top_k(scorer, pool, demo.paragraph, 4, exclude_id=demo.id)


# --- criterion 7 -------------------------------------------------------------------


def test_c07_standardization_table():
    """Exact unit conversions; unparseable inputs flagged, never coerced."""
    temp_rt, d1 = standardize_temperature("room temperature")
    assert temp_rt.magnitude == 25.0 and d1 is None
    temp_k, d2 = standardize_temperature("393 K")
    assert temp_k.magnitude == pytest.approx(119.85, abs=1e-12) and d2 is None
    time_min, d3 = standardize_time("30 min")
    assert time_min.magnitude == 0.5 and d3 is None
    time_days, d4 = standardize_time("3 days")
    assert time_days.magnitude == 72.0 and d4 is None

    for bad in ("a while", "warmish", "several moments", "120 parsecs"):
        value_t, diag_t = standardize_time(bad)
        value_c, diag_c = standardize_temperature(bad)
        assert value_t is None and "unparseable" in diag_t
        assert value_c is None and "unparseable" in diag_c


# --- criterion 8 -------------------------------------------------------------------


def test_c08_coreference_fixture():
    """Every defined proxy resolves (100%), per-proxy report rows, idempotence."""
    corpus = ingest((FIXTURES / "corpus12.jsonl").read_text(encoding="utf-8").splitlines())
    cassette = Cassette.load(FIXTURES / "cassette_e2e.jsonl")
    gateway = Gateway(ReplayTransport(cassette))

    proxy_docs = {
        "10.5555/mof-03": ("H2L", "2-aminoterephthalic acid"),
        "10.5555/mof-06": ("L1", "4,4'-bipyridine"),
        "10.5555/mof-09": ("H4L", "biphenyl-3,3',5,5'-tetracarboxylic acid"),
    }
    report = ResolutionReport()
    for doi, (proxy, full_name) in proxy_docs.items():
        doc = corpus.document(doi)
        table = harvest_anaphors(doc, 1, gateway)
        assert table.entries[proxy] == full_name
        record = SynthesisRecord(organic_linker_name=proxy)
        resolved, unresolved = resolve(record, table)
        assert resolved.organic_linker_name == full_name
        assert unresolved == []
        once = resolve(resolved, table)
        assert once == resolve(once[0], table) == (resolved, [])
        report.observe(detect_proxies(proxy), unresolved)

    assert report.occurrence_resolution_rate() == 1.0
    rows = report.table_rows()
    assert {row["proxy_word"] for row in rows} == {"H2L", "L1", "H4L"}
    for row in rows:
        assert set(row) == {"proxy_word", "occurrence_count", "resolution_count", "resolution_ratio"}
        assert row["resolution_ratio"] == 1.0


# --- criterion 9 -------------------------------------------------------------------


def test_c09_query_dsl():
    """500 round-trips, the precedence case, and the 30-record linear-scan oracle."""
    rng = random.Random(2718)
    for _ in range(500):
        ast = random_ast(rng)
        assert parse(format_query(ast)) == ast

    assert parse("a OR b AND c") == Or(TextTerm("a"), And(TextTerm("b"), TextTerm("c")))

    rows = make_rows()
    for query in (
        "metal:nitrate AND NOT solvent:ethanol",
        'paragraph:"paragraph 2" OR solvent:DMF',
        "NOT (metal:copper OR solvent:water)",
    ):
        ast = parse(query)
        hits, total = search(rows, ast)
        oracle = [rid for rid, record in sorted(rows) if evaluate(ast, record)]
        assert [h.record_id for h in hits] == oracle
        assert total == len(oracle)


# --- criterion 10 ------------------------------------------------------------------


def test_c10_detector_baseline():
    """Mean F1 >= 0.95 on the separable corpus; per-fold class ratios within 1."""
    from test_detector import make_fixture_corpus

    samples = make_fixture_corpus(n_pos=120, n_neg=600)
    labels = [s.label for s in samples]
    folds = stratified_folds(labels, 5)
    for fold in folds:
        pos = sum(1 for i in fold if labels[i])
        assert abs(pos - 120 / 5) <= 1
        assert abs((len(fold) - pos) - 600 / 5) <= 1
    _, metrics = train_stratified_cv(samples, folds=5)
    assert sum(m.f1 for m in metrics) / len(metrics) >= 0.95


# --- criterion 11 ------------------------------------------------------------------


def test_c11_agreement_rules():
    """Jaccard boundary exact; 8/10 accepted, 7/10 rejected; union merging."""
    a4 = {f"t{i}" for i in range(4)}
    b5 = a4 | {"t99"}
    assert jaccard(a4, b5) == 0.8  # valid at the boundary
    c79 = {f"t{i}" for i in range(79)}
    d100 = {f"t{i}" for i in range(100)}
    assert jaccard(c79, d100) == 0.79  # invalid just below

    all_values = {slot: f"value{i}" for i, slot in enumerate(SLOTS)}
    eight_valid = dict(all_values)
    eight_valid[SLOTS[0]] = "completely different wording"
    eight_valid[SLOTS[1]] = "also a total mismatch"
    result, merged = agreement_merge(SynthesisRecord(**all_values), SynthesisRecord(**eight_valid))
    assert result.overlap_rate == 0.8
    assert result.paper_valid

    seven_valid = dict(eight_valid)
    seven_valid[SLOTS[2]] = "third mismatch entirely"
    result7, _ = agreement_merge(SynthesisRecord(**all_values), SynthesisRecord(**seven_valid))
    assert result7.overlap_rate == 0.7
    assert not result7.paper_valid

    a = SynthesisRecord(metal_precursor_name="zinc nitrate salt pure grade")
    b = SynthesisRecord(metal_precursor_name="zinc nitrate salt pure")
    result_union, merged_union = agreement_merge(a, b)
    assert result_union.field_valid["metal_precursor_name"]
    merged_tokens = set(merged_union.metal_precursor_name.split())
    assert merged_tokens == {"zinc", "nitrate", "salt", "pure", "grade"}


# --- criterion 12 ------------------------------------------------------------------


def test_c12_cost_ledger():
    """150,000 prompt tokens at 10$/1M = 1.50$; totals equal the response sum."""
    ledger = UsageLedger()
    ledger.add(ChatResponse(text="", prompt_tokens=150_000, completion_tokens=0))
    assert ledger.cost(10.0) == 1.50

    ledger2 = UsageLedger()
    responses = [
        ChatResponse(text="a", prompt_tokens=123, completion_tokens=45),
        ChatResponse(text="b", prompt_tokens=67, completion_tokens=8),
        ChatResponse(text="c", prompt_tokens=900, completion_tokens=100),
    ]
    for response in responses:
        ledger2.add(response)
    assert ledger2.prompt_tokens == sum(r.prompt_tokens for r in responses)
    assert ledger2.completion_tokens == sum(r.completion_tokens for r in responses)
    assert ledger2.total_tokens == 1243


# --- criterion 13 (secondary) --------------------------------------------------------


def test_c13_secondary_curation_loop_over_http():
    """Operator flow PreExtracted -> Finalized over the /v1 API with a planted
    human-vs-AI disagreement; the finalized record lands in GET /pool.

    The browser app is a pure client of these endpoints; this criterion runs
    with the webui unbuilt (and the rest of the suite never touches it).
    """
    paragraph = (
        "Zn(NO3)2·6H2O (0.30 g) and terephthalic acid (0.17 g) were dissolved in hot water "
        "and heated at 120 °C for 72 h."
    )
    ai_record = SynthesisRecord(
        metal_precursor_name="Zn(NO3)2·6H2O",
        organic_linker_name="terephthalic acid",
        solvent_name="hot water",
        reaction_duration="72 h",
        reaction_temperature="120 °C",
    )
    human_record = ai_record.replace(solvent_name="water")

    def scripted(request):
        return record_to_completion(ai_record)

    app = create_app(Store(), Gateway(MockTransport(scripted)))
    client = TestClient(app)
    client.post(
        "/v1/documents",
        json={"records": [{"doi": "10.1/ui", "mof_ids": ["M"], "title": "t", "body": paragraph}]},
    )
    task = client.post(
        "/v1/annotations/tasks", json={"paragraph_id": "10.1/ui#p0", "annotators": ["ana", "ben"]}
    ).json()
    task_id = task["task_id"]
    assert task["ai_preannotation"]["solvent_name"] == "hot water"

    for annotator in ("ana", "ben"):
        client.post(
            f"/v1/annotations/tasks/{task_id}/draft",
            json={"annotator": annotator, "record": human_record.to_dict()},
        )
    client.post(f"/v1/annotations/tasks/{task_id}/agreement")
    client.post(f"/v1/curation/{task_id}/advance", json={"action": "human_pass", "payload": {}})
    checked = client.post(
        f"/v1/curation/{task_id}/advance", json={"action": "fewshot_check", "payload": {}}
    ).json()
    assert checked["fewshot_diff"] == [
        {"field": "solvent_name", "human": "water", "ai": "hot water"}
    ]

    finalized = client.post(
        f"/v1/curation/{task_id}/advance",
        json={
            "action": "finalize",
            "payload": {"verdicts": {"solvent_name": {"choice": "accept-human"}}},
        },
    ).json()
    assert finalized["state"] == "Finalized"

    pool = client.get("/v1/pool").json()
    assert pool["n"] == 1
    assert pool["entries"][0]["gold"]["solvent_name"] == "water"

    # The primary suite never needs the frontend build to exist.
    assert not (Path(__file__).parent.parent / "frontend" / "dist" / "required.marker").exists()
