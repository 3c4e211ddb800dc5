import json

import pytest

from synthex.coref import (
    AnaphorTable,
    ResolutionReport,
    detect_proxies,
    harvest_anaphors,
    is_proxy,
    resolve,
)
from synthex.corpus import ingest
from synthex.llmgate import Gateway, MockTransport
from synthex.records import SynthesisRecord


class TestProxyPattern:
    @pytest.mark.parametrize("token", ["L", "HL", "H2L", "L1", "H4L", "H12L3"])
    def test_accepts_the_proxy_family(self, token):
        assert is_proxy(token)

    @pytest.mark.parametrize("token", ["l", "Hl", "mL", "HCl", "LiCl", "ligand", "4L5X", "h2l"])
    def test_rejects_non_proxies(self, token):
        assert not is_proxy(token)

    def test_detects_inside_condition_values(self):
        assert detect_proxies("H2L (0.1 mmol)") == ["H2L"]
        assert detect_proxies("4,4'-bipyridine") == []
        assert detect_proxies("L1 and L2") == ["L1", "L2"]

    def test_does_not_match_embedded_letters(self):
        assert detect_proxies("10 mL of HCl") == []
        assert detect_proxies("the ligand L, 5 mL") == ["L"]


def make_document(paragraphs, doi="10.1/doc"):
    body = "\n\n".join(paragraphs)
    line = json.dumps({"doi": doi, "mof_ids": ["M"], "title": "t", "body": body})
    return ingest([line]).documents[0]


class TestHarvest:
    def test_definition_found_in_pre_text(self):
        doc = make_document(
            [
                "Intro text. We prepared the ligand 4,4'-bipyridine (L) as reported.",
                "Synthesis: L (0.1 mmol) was dissolved in DMF.",
            ]
        )
        transport = MockTransport(lambda r: json.dumps({"L": "4,4'-bipyridine"}))
        table = harvest_anaphors(doc, 1, Gateway(transport))
        assert table.entries == {"L": "4,4'-bipyridine"}

    def test_synthesis_paragraph_first_means_empty_pre_text(self):
        doc = make_document(["Synthesis: L was dissolved.", "Later discussion."])
        calls = []
        transport = MockTransport(lambda r: calls.append(r) or "{}")
        table = harvest_anaphors(doc, 0, Gateway(transport))
        assert table.entries == {}
        assert calls == []  # no LLM call without preceding text

    def test_pre_text_without_definitions_gives_empty_table(self):
        doc = make_document(["No definitions here.", "Synthesis paragraph."])
        transport = MockTransport(lambda r: "{}")
        table = harvest_anaphors(doc, 1, Gateway(transport))
        assert table.entries == {}

    def test_nonconforming_pairs_dropped_with_diagnostics(self):
        doc = make_document(["The ligand (L). Something (Q7).", "Synthesis."])
        reply = json.dumps({"L": "4,4'-bipyridine", "Q7": "quinoline", "H2L": "L1", "HL": ""})
        table = harvest_anaphors(doc, 1, Gateway(MockTransport(lambda r: reply)))
        assert table.entries == {"L": "4,4'-bipyridine"}
        assert len(table.diagnostics) == 3

    def test_llm_failure_degrades_to_empty_table(self):
        from synthex.llmgate import RetryPolicy, TransportError

        class Down:
            def send(self, request):
                raise TransportError("offline")

        doc = make_document(["Pre text mentioning L.", "Synthesis."])
        gateway = Gateway(Down(), retry=RetryPolicy(max_attempts=2, base_delay=0), sleep=lambda s: None)
        table = harvest_anaphors(doc, 1, gateway)
        assert table.entries == {}
        assert any("failed" in d for d in table.diagnostics)

    def test_table_invariants(self):
        with pytest.raises(ValueError):
            AnaphorTable("d", {"notproxy": "name"})
        with pytest.raises(ValueError):
            AnaphorTable("d", {"L": "H2L"})  # value may not be proxy-shaped


class TestResolve:
    def test_direct_hit(self):
        record = SynthesisRecord(organic_linker_name="H2L")
        table = AnaphorTable("d", {"H2L": "terephthalic acid"})
        resolved, unresolved = resolve(record, table)
        assert resolved.organic_linker_name == "terephthalic acid"
        assert unresolved == []

    def test_miss_left_unchanged_and_reported(self):
        record = SynthesisRecord(organic_linker_name="L3")
        table = AnaphorTable("d", {"L": "bipyridine"})
        resolved, unresolved = resolve(record, table)
        assert resolved.organic_linker_name == "L3"
        assert unresolved == ["L3"]

    def test_proxy_inside_amount_text_resolves_in_linker_name_only(self):
        record = SynthesisRecord(
            organic_linker_name="H2L (98%)",
            metal_precursor_name="H2L-shaped metal name",  # non-linker fields untouched
        )
        table = AnaphorTable("d", {"H2L": "oxalic acid"})
        resolved, _ = resolve(record, table)
        assert resolved.organic_linker_name == "oxalic acid (98%)"
        assert resolved.metal_precursor_name == "H2L-shaped metal name"

    def test_non_proxy_values_are_fixed_points(self):
        record = SynthesisRecord(organic_linker_name="terephthalic acid")
        table = AnaphorTable("d", {"L": "bipyridine"})
        resolved, unresolved = resolve(record, table)
        assert resolved == record
        assert unresolved == []

    def test_resolve_is_idempotent(self):
        table = AnaphorTable("d", {"L1": "fumaric acid"})
        record = SynthesisRecord(organic_linker_name="L1 and L9")
        once, unresolved_once = resolve(record, table)
        twice, unresolved_twice = resolve(once, table)
        assert once == twice
        assert unresolved_once == ["L9"]
        assert unresolved_twice == ["L9"]

    def test_absent_linker_untouched(self):
        record = SynthesisRecord(solvent_name="DMF")
        resolved, unresolved = resolve(record, AnaphorTable("d", {}))
        assert resolved == record
        assert unresolved == []


class TestResolutionReport:
    def test_tallies_match_table_two_format(self):
        report = ResolutionReport()
        # 5 occurrences of L (4 resolved), 2 of H2L (both resolved)
        for _ in range(4):
            report.observe(["L"], [])
        report.observe(["L"], ["L"])
        report.observe(["H2L", "H2L"], [])
        rows = report.table_rows()
        assert rows[0] == {
            "proxy_word": "L",
            "occurrence_count": 5,
            "resolution_count": 4,
            "resolution_ratio": 0.8,
        }
        assert rows[1]["proxy_word"] == "H2L"
        assert rows[1]["resolution_ratio"] == 1.0

    def test_occurrence_rate_calibration(self):
        # Calibrated fixture: 100 proxy occurrences, 79 resolvable.
        report = ResolutionReport()
        for i in range(50):  # L: 40 of 50 resolve
            report.observe(["L"], [] if i < 40 else ["L"])
        for i in range(30):  # H2L: 24 of 30 resolve
            report.observe(["H2L"], [] if i < 24 else ["H2L"])
        for i in range(20):  # L9: 15 of 20 resolve
            report.observe(["L9"], [] if i < 15 else ["L9"])
        assert report.total_occurrences == 100
        assert report.occurrence_resolution_rate() == pytest.approx(0.79)
        # Both accountings are reported; none of these three resolves fully.
        assert report.distinct_resolution_rate() == 0.0
        assert report.unresolved_per_paragraph() == pytest.approx(21 / 100)

    def test_empty_report_rates_absent(self):
        report = ResolutionReport()
        assert report.occurrence_resolution_rate() is None
        assert report.unresolved_per_paragraph() is None
