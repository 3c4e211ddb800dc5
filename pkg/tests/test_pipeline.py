import json
from pathlib import Path

import pytest

from synthex import pipeline
from synthex.llmgate import Cassette, Gateway, ReplayTransport

FIXTURES = Path(__file__).parent / "fixtures"


def run_fixture_pipeline(out_dir):
    gateway = Gateway(ReplayTransport(Cassette.load(FIXTURES / "cassette_e2e.jsonl")))
    return pipeline.run_pipeline(
        corpus_lines=(FIXTURES / "corpus12.jsonl").read_text(encoding="utf-8").splitlines(),
        labeled_samples=pipeline.load_labeled_samples(FIXTURES / "labeled.jsonl"),
        pool=pipeline.load_pool(FIXTURES / "pool.jsonl"),
        gateway=gateway,
        out_dir=out_dir,
    )


ARTIFACTS = ("results.jsonl", "report.json", "features.csv", "features.manifest.json")


@pytest.fixture(scope="module")
def outcome(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return run_fixture_pipeline(out), out


class TestEndToEnd:
    def test_replay_covers_all_twelve_paragraphs(self, outcome):
        result, _ = outcome
        assert len(result.results) == 12
        assert not any(r.unparseable for r in result.results)

    def test_planted_outcomes_land_in_expected_cells(self, outcome):
        result, _ = outcome
        # Planted: 3 wrong values (FP), 1 missed solvent (FN); the rest exact.
        assert result.matrix.to_dict() == {"tp": 98, "fp": 3, "tn": 18, "fn": 1}
        assert result.metrics.f1 == pytest.approx(0.98)
        assert result.metrics.acc == pytest.approx(116 / 120)

    def test_proxy_linkers_resolved_to_full_names(self, outcome):
        result, _ = outcome
        resolved = result.resolved
        assert resolved["10.5555/mof-03#p1"].organic_linker_name == "2-aminoterephthalic acid"
        assert resolved["10.5555/mof-06#p1"].organic_linker_name == "4,4'-bipyridine"
        assert (
            resolved["10.5555/mof-09#p1"].organic_linker_name
            == "biphenyl-3,3',5,5'-tetracarboxylic acid"
        )

    def test_coref_report_shows_full_resolution(self, outcome):
        result, _ = outcome
        report = json.loads(result.report_path.read_text())["coreference"]
        assert report["total_occurrences"] == 3
        assert report["occurrence_resolution_rate"] == 1.0
        assert report["distinct_resolution_rate"] == 1.0
        rows = {row["proxy_word"]: row for row in report["rows"]}
        assert rows["H2L"]["resolution_ratio"] == 1.0

    def test_self_exclusion_in_results(self, outcome):
        result, _ = outcome
        for r in result.results:
            assert r.paragraph_id not in r.shot_ids
            assert len(r.shot_ids) == 4

    def test_repair_round_recorded_in_diagnostics(self, outcome):
        result, _ = outcome
        doc12 = next(r for r in result.results if r.paragraph_id == "10.5555/mof-12#p1")
        assert any("repaired" in d for d in doc12.diagnostics)

    def test_unknown_field_diagnostic_surfaces(self, outcome):
        result, _ = outcome
        doc2 = next(r for r in result.results if r.paragraph_id == "10.5555/mof-02#p1")
        assert any("unknown field: catalyst" in d for d in doc2.diagnostics)

    def test_funnel_in_report(self, outcome):
        result, _ = outcome
        funnel = json.loads(result.report_path.read_text())["funnel"]["stats"]
        assert funnel["total_docs"] == 14
        assert funnel["single_mof_docs"] == 13
        assert funnel["single_synthesis_paragraph_docs"] == 12

    def test_features_csv_rows_match_fully_named_records(self, outcome):
        # Doc 5's solvent was missed (planted FN) so it cannot rank in the
        # solvent head and drops out of the export: 11 of 12 records remain.
        result, _ = outcome
        lines = result.features_path.read_text().strip().split("\n")
        assert len(lines) == 12  # header + 11 records

    def test_byte_identical_across_three_runs(self, tmp_path):
        digests = []
        for i in range(3):
            out = tmp_path / f"run{i}"
            run_fixture_pipeline(out)
            digests.append({name: (out / name).read_bytes() for name in ARTIFACTS})
        assert digests[0] == digests[1] == digests[2]

    def test_ledger_totals_in_report(self, outcome):
        result, _ = outcome
        report = json.loads(result.report_path.read_text())
        usage = report["usage"]
        assert usage["ledger"]["requests"] == 18
        assert usage["cost_estimate"] == pytest.approx(
            (usage["ledger"]["prompt_tokens"] + usage["ledger"]["completion_tokens"]) / 1e6 * 10.0
        )
