"""Plain-text corpus ingestion, paragraph segmentation, and dataset funnel filters.

Input is one JSON record per line (fields: doi, mof_ids, title, body). Bodies
are pre-converted plain text; paragraphs are runs of non-blank lines separated
by one or more blank lines. Each paragraph keeps the char span of its raw
slice in the body, so the original document is reconstructible byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping


@dataclass(frozen=True)
class Paragraph:
    id: str
    doc_doi: str
    index: int
    text: str  # lines joined with single spaces, trimmed
    char_span: tuple[int, int]  # raw slice offsets into the document body


@dataclass(frozen=True)
class Document:
    doi: str
    mof_ids: tuple[str, ...]
    title: str
    body: str
    paragraphs: tuple[Paragraph, ...]


@dataclass(frozen=True)
class Reject:
    line_no: int
    reason: str


@dataclass(frozen=True)
class Warning_:
    doi: str
    message: str


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)
    warnings: list[Warning_] = field(default_factory=list)
    total_records: int = 0
    records_with_doi: int = 0

    def document(self, doi: str) -> Document:
        for doc in self.documents:
            if doc.doi == doi:
                return doc
        raise KeyError(f"no document with doi {doi!r}")

    def paragraphs(self) -> Iterable[Paragraph]:
        for doc in self.documents:
            yield from doc.paragraphs


@dataclass(frozen=True)
class CorpusStats:
    """Funnel counts; each successive stage is a subset of the previous one."""

    total_docs: int
    docs_with_doi: int
    deduped_dois: int
    single_mof_docs: int
    single_synthesis_paragraph_docs: int
    no_synthesis_paragraph_docs: int = 0
    multi_synthesis_paragraph_docs: int = 0
    measured_synthesis_char_share: float | None = None

    def __post_init__(self) -> None:
        funnel = (
            self.total_docs,
            self.docs_with_doi,
            self.deduped_dois,
            self.single_mof_docs,
            self.single_synthesis_paragraph_docs,
        )
        for a, b in zip(funnel, funnel[1:]):
            if b > a:
                raise ValueError(f"funnel counts must be non-increasing, got {funnel}")

    def to_dict(self) -> dict:
        return {
            "total_docs": self.total_docs,
            "docs_with_doi": self.docs_with_doi,
            "deduped_dois": self.deduped_dois,
            "single_mof_docs": self.single_mof_docs,
            "single_synthesis_paragraph_docs": self.single_synthesis_paragraph_docs,
            "no_synthesis_paragraph_docs": self.no_synthesis_paragraph_docs,
            "multi_synthesis_paragraph_docs": self.multi_synthesis_paragraph_docs,
            "measured_synthesis_char_share": self.measured_synthesis_char_share,
        }


def paragraph_id(doi: str, index: int) -> str:
    return f"{doi}#p{index}"


def segment(doi: str, body: str) -> tuple[Paragraph, ...]:
    """Split a body into paragraphs on blank lines.

    A blank line is empty or whitespace-only. Within a paragraph, lines are
    joined with a single space. Spans cover the raw (unnormalized) slice.
    """
    paragraphs: list[Paragraph] = []
    offset = 0
    group: list[tuple[int, str]] = []  # (start offset, raw line)

    def flush() -> None:
        if not group:
            return
        start = group[0][0]
        end = group[-1][0] + len(group[-1][1])
        text = " ".join(line.strip() for _, line in group)
        paragraphs.append(
            Paragraph(
                id=paragraph_id(doi, len(paragraphs)),
                doc_doi=doi,
                index=len(paragraphs),
                text=text,
                char_span=(start, end),
            )
        )
        group.clear()

    for raw_line in body.split("\n"):
        if raw_line.strip():
            group.append((offset, raw_line))
        else:
            flush()
        offset += len(raw_line) + 1  # +1 for the split newline
    flush()
    return tuple(paragraphs)


def reconstruct(doc: Document) -> str:
    """Rebuild the body from paragraph spans plus the recorded separators."""
    parts: list[str] = []
    cursor = 0
    for p in doc.paragraphs:
        start, end = p.char_span
        parts.append(doc.body[cursor:start])  # separator gap
        parts.append(doc.body[start:end])
        cursor = end
    parts.append(doc.body[cursor:])
    return "".join(parts)


def ingest(lines: Iterable[str]) -> Corpus:
    """Parse a line-delimited record stream into an immutable corpus.

    Malformed records land in ``rejects`` with a reason; they are never
    silently dropped. Duplicate DOIs keep the first occurrence.
    """
    corpus = Corpus()
    seen_dois: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        corpus.total_records += 1
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            corpus.rejects.append(Reject(line_no, f"invalid json: {exc.msg}"))
            continue
        if not isinstance(raw, dict):
            corpus.rejects.append(Reject(line_no, "record is not an object"))
            continue
        doi = raw.get("doi")
        if not isinstance(doi, str) or not doi.strip():
            corpus.rejects.append(Reject(line_no, "missing doi"))
            continue
        corpus.records_with_doi += 1
        doi = doi.strip()
        if doi in seen_dois:
            corpus.rejects.append(Reject(line_no, "duplicate doi"))
            continue
        mof_ids = raw.get("mof_ids")
        if not isinstance(mof_ids, list) or not all(isinstance(m, str) for m in mof_ids):
            corpus.rejects.append(Reject(line_no, "mof_ids must be a list of strings"))
            continue
        body = raw.get("body")
        if not isinstance(body, str):
            corpus.rejects.append(Reject(line_no, "missing body"))
            continue
        title = raw.get("title")
        if not isinstance(title, str):
            title = ""
        seen_dois.add(doi)
        paragraphs = segment(doi, body)
        if not paragraphs:
            corpus.warnings.append(Warning_(doi, "empty body: document has 0 paragraphs"))
        corpus.documents.append(
            Document(doi=doi, mof_ids=tuple(mof_ids), title=title, body=body, paragraphs=paragraphs)
        )
    return corpus


def apply_pipeline_filters(
    corpus: Corpus, detector_labels: Mapping[str, bool]
) -> tuple[Corpus, CorpusStats]:
    """Retain documents with exactly one MOF id and exactly one positive paragraph.

    ``detector_labels`` maps paragraph id -> is-synthesis and must cover every
    paragraph in the corpus.
    """
    for p in corpus.paragraphs():
        if p.id not in detector_labels:
            raise KeyError(f"detector label missing for paragraph {p.id}")

    single_mof = [d for d in corpus.documents if len(d.mof_ids) == 1]
    retained: list[Document] = []
    no_synth = 0
    multi_synth = 0
    for doc in single_mof:
        positives = [p for p in doc.paragraphs if detector_labels[p.id]]
        if len(positives) == 1:
            retained.append(doc)
        elif len(positives) == 0:
            no_synth += 1
        else:
            multi_synth += 1

    synth_chars = 0
    total_chars = 0
    for doc in retained:
        total_chars += sum(len(p.text) for p in doc.paragraphs)
        synth_chars += sum(len(p.text) for p in doc.paragraphs if detector_labels[p.id])
    share = (synth_chars / total_chars) if total_chars else None

    stats = CorpusStats(
        total_docs=corpus.total_records,
        docs_with_doi=corpus.records_with_doi,
        deduped_dois=len(corpus.documents),
        single_mof_docs=len(single_mof),
        single_synthesis_paragraph_docs=len(retained),
        no_synthesis_paragraph_docs=no_synth,
        multi_synthesis_paragraph_docs=multi_synth,
        measured_synthesis_char_share=share,
    )
    filtered = Corpus(
        documents=retained,
        rejects=list(corpus.rejects),
        warnings=list(corpus.warnings),
        total_records=corpus.total_records,
        records_with_doi=corpus.records_with_doi,
    )
    return filtered, stats


def funnel_report(corpus: Corpus, stats: CorpusStats) -> dict:
    """Machine-readable ingest/filter report: funnel, rejects, warnings."""
    return {
        "stats": stats.to_dict(),
        "rejects": [{"line": r.line_no, "reason": r.reason} for r in corpus.rejects],
        "warnings": [{"doi": w.doi, "message": w.message} for w in corpus.warnings],
    }
