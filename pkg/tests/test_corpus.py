import json
import random
import string

import pytest

from synthex.corpus import (
    CorpusStats,
    apply_pipeline_filters,
    funnel_report,
    ingest,
    reconstruct,
    segment,
)


def make_line(doi, body, mof_ids=None, title="t"):
    return json.dumps({"doi": doi, "mof_ids": mof_ids or ["M1"], "title": title, "body": body})


def test_blank_line_segmentation():
    corpus = ingest([make_line("10.1/a", "Para1.\n\nPara2.")])
    doc = corpus.documents[0]
    assert [p.index for p in doc.paragraphs] == [0, 1]
    assert [p.text for p in doc.paragraphs] == ["Para1.", "Para2."]
    assert doc.paragraphs[0].id == "10.1/a#p0"


def test_multiline_paragraph_joined_with_single_space():
    corpus = ingest([make_line("10.1/a", "line one\nline two\n\nsecond para")])
    doc = corpus.documents[0]
    assert doc.paragraphs[0].text == "line one line two"
    assert doc.paragraphs[1].text == "second para"


def test_empty_body_yields_zero_paragraphs_and_warning():
    corpus = ingest([make_line("10.1/a", "")])
    assert corpus.documents[0].paragraphs == ()
    assert any("empty body" in w.message for w in corpus.warnings)


def test_duplicate_doi_rejected_with_reason():
    corpus = ingest([make_line("10.1/a", "x"), make_line("10.1/a", "y")])
    assert len(corpus.documents) == 1
    assert [r.reason for r in corpus.rejects] == ["duplicate doi"]


@pytest.mark.parametrize(
    "line,reason",
    [
        ("{not json", "invalid json"),
        (json.dumps({"mof_ids": [], "title": "", "body": ""}), "missing doi"),
        (json.dumps({"doi": "10.1/x", "mof_ids": "M1", "body": ""}), "mof_ids"),
        (json.dumps({"doi": "10.1/x", "mof_ids": []}), "missing body"),
    ],
)
def test_malformed_records_rejected_not_dropped(line, reason):
    corpus = ingest([line])
    assert corpus.documents == []
    assert len(corpus.rejects) == 1
    assert reason in corpus.rejects[0].reason


def test_segmentation_round_trip_reproduces_body():
    rng = random.Random(7)
    for _ in range(50):
        lines = []
        for _ in range(rng.randint(0, 12)):
            if rng.random() < 0.35:
                lines.append("")
            else:
                lines.append(
                    "".join(rng.choice(string.ascii_letters + "  .") for _ in range(rng.randint(1, 30)))
                )
        body = "\n".join(lines)
        corpus = ingest([make_line("10.1/rt", body)])
        assert reconstruct(corpus.documents[0]) == body


def test_spans_cover_raw_slices_without_overlap():
    body = "  leading ws\nsecond line\n\n\nnext para  \n"
    paragraphs = segment("d", body)
    spans = [p.char_span for p in paragraphs]
    assert all(s < e for s, e in spans)
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        assert e1 <= s2


def test_filters_keep_single_mof_single_synthesis_docs():
    lines = [
        make_line("10.1/keep", "pre\n\nsynthesis here", mof_ids=["A"]),
        make_line("10.1/twomofs", "pre\n\nsynthesis here", mof_ids=["A", "B"]),
        make_line("10.1/nosynth", "pre\n\npost", mof_ids=["A"]),
        make_line("10.1/twosynth", "synth one\n\nsynth two", mof_ids=["A"]),
    ]
    corpus = ingest(lines)
    labels = {}
    for p in corpus.paragraphs():
        labels[p.id] = "synth" in p.text
    filtered, stats = apply_pipeline_filters(corpus, labels)
    assert [d.doi for d in filtered.documents] == ["10.1/keep"]
    assert stats.total_docs == 4
    assert stats.docs_with_doi == 4
    assert stats.deduped_dois == 4
    assert stats.single_mof_docs == 3
    assert stats.single_synthesis_paragraph_docs == 1
    assert stats.no_synthesis_paragraph_docs == 1
    assert stats.multi_synthesis_paragraph_docs == 1


def test_filters_require_label_for_every_paragraph():
    corpus = ingest([make_line("10.1/a", "one\n\ntwo")])
    with pytest.raises(KeyError):
        apply_pipeline_filters(corpus, {})


def test_funnel_monotonicity_enforced():
    with pytest.raises(ValueError):
        CorpusStats(
            total_docs=1,
            docs_with_doi=2,
            deduped_dois=1,
            single_mof_docs=1,
            single_synthesis_paragraph_docs=1,
        )


def test_ingest_is_deterministic():
    lines = [make_line("10.1/a", "one\n\ntwo"), make_line("10.1/b", "three")]
    c1, c2 = ingest(lines), ingest(lines)
    assert c1.documents == c2.documents
    assert c1.rejects == c2.rejects


def test_funnel_report_shape():
    corpus = ingest([make_line("10.1/a", "pre\n\nsynthesis")])
    labels = {p.id: "synthesis" in p.text for p in corpus.paragraphs()}
    _, stats = apply_pipeline_filters(corpus, labels)
    report = funnel_report(corpus, stats)
    assert set(report) == {"stats", "rejects", "warnings"}
    assert report["stats"]["measured_synthesis_char_share"] is not None
