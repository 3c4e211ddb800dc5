import json
from pathlib import Path

import pytest

from synthex.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def test_ingest_writes_store_and_report(tmp_path, capsys):
    store_path = tmp_path / "corpus.db"
    report_path = tmp_path / "funnel.json"
    rc = main(
        [
            "ingest",
            "--in",
            str(FIXTURES / "corpus12.jsonl"),
            "--out",
            str(store_path),
            "--report",
            str(report_path),
        ]
    )
    assert rc == 0
    assert store_path.exists()
    report = json.loads(report_path.read_text())
    assert report["rejects"] == []
    assert "ingested 14 documents" in capsys.readouterr().out


def test_detect_train_then_run(tmp_path, capsys):
    model_path = tmp_path / "model.bin"
    rc = main(
        ["detect", "train", "--samples", str(FIXTURES / "labeled.jsonl"), "--out", str(model_path)]
    )
    assert rc == 0
    assert model_path.exists()
    out = capsys.readouterr().out
    assert "mean f1" in out

    store_path = tmp_path / "corpus.db"
    main(["ingest", "--in", str(FIXTURES / "corpus12.jsonl"), "--out", str(store_path), "--report", str(tmp_path / "r.json")])
    labels_path = tmp_path / "labels.json"
    rc = main(["detect", "run", "--model", str(model_path), "--corpus", str(store_path), "--out", str(labels_path)])
    assert rc == 0
    labels = json.loads(labels_path.read_text())["labels"]
    assert labels["10.5555/mof-01#p1"]["label"] is True
    assert labels["10.5555/mof-01#p0"]["label"] is False


def test_retrieve_ranks_pool(capsys):
    rc = main(
        [
            "retrieve",
            "--algo",
            "bm25",
            "--k",
            "3",
            "--pool",
            str(FIXTURES / "pool.jsonl"),
            "--query-id",
            "10.5555/mof-01#p1",
        ]
    )
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3
    assert "10.5555/mof-01#p1" not in [line.split("\t")[1] for line in lines]


def test_search_over_store(tmp_path, capsys):
    from synthex.store import Store

    store_path = tmp_path / "results.db"
    store = Store(store_path)
    store.put(
        "records",
        "p1",
        {
            "paragraph_id": "p1",
            "doi": "10.1/x",
            "title": "t",
            "paragraph": "zinc paragraph",
            "record": {"metal_precursor_name": "zinc nitrate", "solvent_name": "DMF"},
        },
    )
    rc = main(["search", "metal:zinc AND NOT solvent:water", "--db", str(store_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1 match(es)" in out
    assert "p1" in out

    rc = main(["search", "metal:(bad", "--db", str(store_path)])
    assert rc == 2


def test_eval_command(tmp_path, capsys):
    results_path = tmp_path / "results.jsonl"
    pool = json.loads((FIXTURES / "pool.jsonl").read_text().splitlines()[0])
    row = {
        "paragraph_id": pool["id"],
        "record": pool["gold"],
        "mode": "few",
        "k": 4,
        "algo": "bm25",
        "shot_ids": ["a", "b"],
        "raw_text": "",
        "prompt_fingerprint": "fp",
        "diagnostics": [],
        "unparseable": False,
    }
    results_path.write_text(json.dumps(row) + "\n")
    out_path = tmp_path / "metrics.json"
    rc = main(
        [
            "eval",
            "--gold",
            str(FIXTURES / "pool.jsonl"),
            "--results",
            str(results_path),
            "--out",
            str(out_path),
        ]
    )
    assert rc == 0
    metrics = json.loads(out_path.read_text())["metrics"]
    assert metrics["f1"] == 1.0


def test_gateway_commands_require_cassette_or_base_url(tmp_path):
    with pytest.raises(SystemExit):
        main(["sweep", "k", "--values", "0", "--pool", str(FIXTURES / "pool.jsonl"), "--out", str(tmp_path / "r.json")])


def test_cli_replay_end_to_end(tmp_path):
    """ingest -> detect train/run -> extract --labels -> resolve -> eval,
    replaying the recorded cassette; metrics match the pipeline's."""
    cassette = str(FIXTURES / "cassette_e2e.jsonl")
    store = tmp_path / "corpus.db"
    model = tmp_path / "model.bin"
    labels = tmp_path / "labels.json"
    results = tmp_path / "results.jsonl"
    resolved = tmp_path / "resolved.jsonl"
    metrics_path = tmp_path / "metrics.json"

    assert main(["ingest", "--in", str(FIXTURES / "corpus12.jsonl"), "--out", str(store), "--report", str(tmp_path / "funnel.json")]) == 0
    assert main(["detect", "train", "--samples", str(FIXTURES / "labeled.jsonl"), "--out", str(model)]) == 0
    assert main(["detect", "run", "--model", str(model), "--corpus", str(store), "--out", str(labels)]) == 0
    assert main([
        "extract", "--mode", "few", "--k", "4", "--algo", "bm25",
        "--corpus", str(store), "--pool", str(FIXTURES / "pool.jsonl"),
        "--labels", str(labels), "--out", str(results), "--cassette", cassette,
    ]) == 0
    assert main([
        "resolve", "--results", str(results), "--corpus", str(store),
        "--out", str(resolved), "--report", str(tmp_path / "resolution.json"),
        "--cassette", cassette,
    ]) == 0
    assert main([
        "eval", "--gold", str(FIXTURES / "pool.jsonl"), "--results", str(resolved),
        "--out", str(metrics_path),
    ]) == 0

    metrics = json.loads(metrics_path.read_text())
    assert metrics["confusion_matrix"] == {"tp": 98, "fp": 3, "tn": 18, "fn": 1}
    resolution = json.loads((tmp_path / "resolution.json").read_text())
    assert resolution["occurrence_resolution_rate"] == 1.0
