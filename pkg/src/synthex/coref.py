"""Coreference resolution for proxy linker names ("L", "H2L", "L1", ...).

Three steps: an LLM pass over all text preceding the synthesis paragraph
harvests proxy -> full-name definitions, a token-anchored recognizer finds
proxy words inside extracted conditions, and exact table lookup rewrites
them. Resolution failures degrade to diagnostics, never crashes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .corpus import Document
from .llmgate import ChatRequest, Gateway, GatewayError
from .records import SynthesisRecord

# Whole-token proxy family: optional H-with-digits prefix, uppercase L, optional digits.
# Lookarounds keep "mL", "HCl" and other embedded letters from matching.
PROXY_PATTERN = re.compile(r"(?<![A-Za-z0-9])(?:H\d*)?L\d*(?![A-Za-z0-9])")

HARVEST_SYSTEM = (
    "You identify shorthand names that a materials-science article defines for its "
    "chemical substances. Given article text, list every shorthand token of the form "
    "L, HL, H2L, L1, H4L (an optional H with digits, a capital L, optional digits) "
    "together with the full substance name it stands for. Return a single JSON object "
    "mapping each shorthand to the full name. Return {} if there are none."
)


class CorefError(Exception):
    pass


@dataclass(frozen=True)
class AnaphorTable:
    """Proxy -> full-name map harvested from one document."""

    doc_doi: str
    entries: dict[str, str] = field(default_factory=dict)
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for proxy, full in self.entries.items():
            if not is_proxy(proxy):
                raise ValueError(f"table key {proxy!r} is not a proxy token")
            # Full names may not contain proxy tokens either, which keeps
            # resolution idempotent.
            if detect_proxies(full):
                raise ValueError(f"table value {full!r} must be a non-proxy full name")


def is_proxy(token: str) -> bool:
    return PROXY_PATTERN.fullmatch(token) is not None


def detect_proxies(value: str) -> list[str]:
    """All proxy tokens in a condition value, in order of appearance."""
    return PROXY_PATTERN.findall(value)


def harvest_anaphors(
    document: Document,
    synthesis_index: int,
    gateway: Gateway,
    model: str = "gpt-4-turbo",
) -> AnaphorTable:
    """Query the LLM over all text preceding the synthesis paragraph.

    Non-conforming pairs are dropped with diagnostics; an LLM failure yields
    an empty table with an error diagnostic so the run can continue.
    """
    if not 0 <= synthesis_index < len(document.paragraphs):
        raise CorefError(f"synthesis paragraph index {synthesis_index} outside document")
    preceding = [p.text for p in document.paragraphs[: synthesis_index]]
    pre_text = "\n\n".join(preceding).strip()
    if not pre_text:
        return AnaphorTable(document.doi, {}, ("no text precedes the synthesis paragraph",))

    request = ChatRequest(model=model, system=HARVEST_SYSTEM, user=pre_text)
    try:
        response = gateway.complete(request)
    except GatewayError as exc:
        return AnaphorTable(document.doi, {}, (f"anaphor harvest failed: {exc}",))

    diagnostics: list[str] = []
    entries: dict[str, str] = {}
    try:
        raw = json.loads(_extract_object(response.text))
    except (json.JSONDecodeError, CorefError):
        return AnaphorTable(document.doi, {}, ("anaphor harvest returned no JSON object",))
    if not isinstance(raw, dict):
        return AnaphorTable(document.doi, {}, ("anaphor harvest returned a non-object",))
    for proxy, full in raw.items():
        if not isinstance(proxy, str) or not isinstance(full, str):
            diagnostics.append(f"dropped non-string pair {proxy!r}")
            continue
        proxy = proxy.strip()
        full = full.strip()
        if not is_proxy(proxy):
            diagnostics.append(f"dropped pair with non-proxy key {proxy!r}")
            continue
        if not full or detect_proxies(full):
            diagnostics.append(f"dropped pair {proxy!r} with proxy-shaped value {full!r}")
            continue
        entries[proxy] = full
    return AnaphorTable(document.doi, entries, tuple(diagnostics))


def resolve(
    record: SynthesisRecord, table: AnaphorTable
) -> tuple[SynthesisRecord, list[str]]:
    """Rewrite proxy tokens in the organic linker name via exact table lookup.

    Returns the resolved record plus proxies that had no table entry. Values
    without proxies are returned unchanged (resolve is idempotent).
    """
    value = record.organic_linker_name
    if value is None:
        return record, []
    proxies = detect_proxies(value)
    if not proxies:
        return record, []
    unresolved = [p for p in proxies if p not in table.entries]
    if len(unresolved) == len(proxies):
        return record, unresolved

    def substitute(match: re.Match) -> str:
        token = match.group(0)
        return table.entries.get(token, token)

    resolved_value = PROXY_PATTERN.sub(substitute, value)
    return record.replace(organic_linker_name=resolved_value), unresolved


@dataclass
class ResolutionReport:
    """Per-proxy occurrence/resolution tallies plus corpus-level rates."""

    occurrences: dict[str, int] = field(default_factory=dict)
    resolutions: dict[str, int] = field(default_factory=dict)
    paragraph_count: int = 0

    def observe(self, proxies: list[str], unresolved: list[str]) -> None:
        self.paragraph_count += 1
        missing = list(unresolved)
        for p in proxies:
            self.occurrences[p] = self.occurrences.get(p, 0) + 1
            if p in missing:
                missing.remove(p)
            else:
                self.resolutions[p] = self.resolutions.get(p, 0) + 1

    @property
    def total_occurrences(self) -> int:
        return sum(self.occurrences.values())

    @property
    def total_resolved(self) -> int:
        return sum(self.resolutions.values())

    def occurrence_resolution_rate(self) -> float | None:
        total = self.total_occurrences
        return (self.total_resolved / total) if total else None

    def distinct_resolution_rate(self) -> float | None:
        """Alternative accounting: fraction of distinct proxy words fully resolved."""
        if not self.occurrences:
            return None
        fully = sum(
            1
            for p, n in self.occurrences.items()
            if self.resolutions.get(p, 0) == n
        )
        return fully / len(self.occurrences)

    def unresolved_per_paragraph(self) -> float | None:
        if not self.paragraph_count:
            return None
        return (self.total_occurrences - self.total_resolved) / self.paragraph_count

    def table_rows(self, top: int = 5) -> list[dict]:
        """Rows sorted by occurrence count descending: proxy, counts, ratio."""
        ranked = sorted(self.occurrences.items(), key=lambda kv: (-kv[1], kv[0]))
        rows = []
        for proxy, count in ranked[:top]:
            resolved = self.resolutions.get(proxy, 0)
            rows.append(
                {
                    "proxy_word": proxy,
                    "occurrence_count": count,
                    "resolution_count": resolved,
                    "resolution_ratio": resolved / count,
                }
            )
        return rows

    def to_dict(self) -> dict:
        return {
            "rows": self.table_rows(top=len(self.occurrences) or 1),
            "total_occurrences": self.total_occurrences,
            "total_resolved": self.total_resolved,
            "occurrence_resolution_rate": self.occurrence_resolution_rate(),
            "distinct_resolution_rate": self.distinct_resolution_rate(),
            "unresolved_per_paragraph": self.unresolved_per_paragraph(),
            "paragraph_count": self.paragraph_count,
        }


def _extract_object(text: str) -> str:
    start = text.find("{")
    if start == -1:
        raise CorefError("no JSON object found")
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise CorefError("unbalanced JSON object")
