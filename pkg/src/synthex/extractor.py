"""Zero-/few-shot extraction per paragraph and tolerant parsing of the model
output into a validated ten-slot record.

Parsing locates the JSON object inside surrounding prose, ignores unknown
fields (with a diagnostic), treats explicit null markers as absence, and on
failure the extractor runs exactly one bounded repair round before flagging
the result unparseable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

from .llmgate import ChatRequest, Gateway, fingerprint
from .promptkit import (
    AssembledPrompt,
    PromptTemplate,
    ShotOrdering,
    assemble,
    DEFAULT_ORDERING,
)
from .records import SLOTS, SynthesisRecord
from .retrieval import Demonstration, DemonstrationPool, ScoredDemo, Scorer, random_select, top_k

NULL_MARKERS = {"null", "none", "n/a", "na", "not specified", "not mentioned", "-"}

REPAIR_INSTRUCTION = (
    "Your previous reply could not be parsed. Return only the structured JSON object "
    "with the ten condition fields and nothing else."
)


class UnparseableOutputError(Exception):
    pass


@dataclass(frozen=True)
class ExtractionConfig:
    mode: str = "few"  # "zero" | "few"
    k: int = 4
    algo: str = "bm25"  # "bm25" | "dense" | "random"
    ordering: ShotOrdering = DEFAULT_ORDERING
    model: str = "gpt-4-turbo"
    seed: int = 0  # for random shot selection
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.mode not in ("zero", "few"):
            raise ValueError(f"mode must be 'zero' or 'few', got {self.mode!r}")
        if self.mode == "zero" and self.k != 0:
            raise ValueError("zero-shot mode requires k=0")
        if self.mode == "few" and self.k < 1:
            raise ValueError("few-shot mode requires k >= 1")

    @classmethod
    def zero_shot(cls, **overrides) -> "ExtractionConfig":
        return replace(cls(mode="zero", k=0), **overrides)

    @classmethod
    def few_shot(cls, k: int = 4, algo: str = "bm25", **overrides) -> "ExtractionConfig":
        return replace(cls(mode="few", k=k, algo=algo), **overrides)


@dataclass(frozen=True)
class ExtractionResult:
    paragraph_id: str
    record: SynthesisRecord
    mode: str
    k: int
    algo: str
    shot_ids: tuple[str, ...]
    raw_text: str
    prompt_fingerprint: str
    diagnostics: tuple[str, ...] = ()
    unparseable: bool = False

    def __post_init__(self) -> None:
        if self.mode == "zero" and (self.k != 0 or self.shot_ids):
            raise ValueError("zero-shot results must have k=0 and no shot ids")

    def to_dict(self) -> dict:
        return {
            "paragraph_id": self.paragraph_id,
            "record": self.record.to_dict(),
            "mode": self.mode,
            "k": self.k,
            "algo": self.algo,
            "shot_ids": list(self.shot_ids),
            "raw_text": self.raw_text,
            "prompt_fingerprint": self.prompt_fingerprint,
            "diagnostics": list(self.diagnostics),
            "unparseable": self.unparseable,
        }


def _strip_code_fence(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        first_nl = stripped.find("\n")
        if first_nl != -1 and stripped.endswith("```"):
            return stripped[first_nl + 1 : -3].strip()
    return stripped


def _find_json_value(text: str):
    """Return the first JSON object/array embedded in the text."""
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch in "{[":
            try:
                value, _ = decoder.raw_decode(text, i)
            except json.JSONDecodeError:
                continue
            return value
    raise UnparseableOutputError("no parseable JSON object in model output")


def parse_output(raw_text: str) -> tuple[SynthesisRecord, list[str]]:
    """Tolerant parse of model output into a record plus diagnostics.

    Unknown fields are ignored (diagnostic), missing fields become absent,
    null markers become absent, and a list of records keeps only the first.
    """
    value = _find_json_value(_strip_code_fence(raw_text))
    diagnostics: list[str] = []
    if isinstance(value, list):
        if not value or not isinstance(value[0], dict):
            raise UnparseableOutputError("JSON array does not contain condition objects")
        diagnostics.append(f"multiple records in output: kept first of {len(value)}")
        value = value[0]
    if not isinstance(value, dict):
        raise UnparseableOutputError(f"expected a JSON object, got {type(value).__name__}")

    slots: dict[str, str | None] = {}
    for key, field_value in value.items():
        if key not in SLOTS:
            diagnostics.append(f"unknown field: {key}")
            continue
        slots[key] = _coerce_slot(key, field_value, diagnostics)
    return SynthesisRecord(**slots), diagnostics


def _coerce_slot(key: str, value, diagnostics: list[str]) -> str | None:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        diagnostics.append(f"numeric value for {key} converted to string")
        return str(value)
    if not isinstance(value, str):
        diagnostics.append(f"non-string value for {key} dropped")
        return None
    trimmed = value.strip()
    if not trimmed:
        diagnostics.append(f"empty string for {key} treated as absent")
        return None
    if trimmed.lower() in NULL_MARKERS:
        return None
    return trimmed


class Extractor:
    """Orchestrates retrieve -> assemble -> complete -> parse for one paragraph."""

    def __init__(
        self,
        gateway: Gateway,
        template: PromptTemplate,
        pool: DemonstrationPool | None = None,
        scorer: Scorer | None = None,
    ) -> None:
        self.gateway = gateway
        self.template = template
        self.pool = pool
        self.scorer = scorer

    def _select_shots(
        self, paragraph_text: str, paragraph_id: str | None, config: ExtractionConfig
    ) -> list[ScoredDemo]:
        if config.mode == "zero":
            return []
        if self.pool is None:
            raise ValueError("few-shot extraction requires a demonstration pool")
        if config.algo == "random":
            return random_select(self.pool, config.k, seed=config.seed, exclude_id=paragraph_id)
        if self.scorer is None:
            raise ValueError(f"algo {config.algo!r} requires a scorer")
        return top_k(self.scorer, self.pool, paragraph_text, config.k, exclude_id=paragraph_id)

    def build_prompt(
        self, paragraph_text: str, paragraph_id: str | None, config: ExtractionConfig
    ) -> tuple[AssembledPrompt, list[ScoredDemo]]:
        scored = self._select_shots(paragraph_text, paragraph_id, config)
        shots: list[Demonstration] = [self.pool.get(s.demo_id) for s in scored] if scored else []
        pool_ids = [d.id for d in self.pool.entries] if self.pool is not None else None
        prompt = assemble(self.template, shots, config.ordering, paragraph_text, pool_ids)
        return prompt, scored

    def extract(
        self, paragraph_text: str, paragraph_id: str, config: ExtractionConfig
    ) -> ExtractionResult:
        prompt, scored = self.build_prompt(paragraph_text, paragraph_id, config)
        request = ChatRequest(
            model=config.model,
            system=prompt.system_text,
            user=prompt.user_text,
            max_output_tokens=config.max_output_tokens,
        )
        response = self.gateway.complete(request)
        diagnostics: list[str] = []
        unparseable = False
        try:
            record, diagnostics = parse_output(response.text)
            raw_text = response.text
        except UnparseableOutputError:
            # One bounded repair round: re-ask with the malformed text attached.
            repair = ChatRequest(
                model=config.model,
                system=prompt.system_text,
                user=f"{REPAIR_INSTRUCTION}\n\nPrevious reply:\n{response.text}",
                max_output_tokens=config.max_output_tokens,
            )
            repair_response = self.gateway.complete(repair)
            raw_text = repair_response.text
            try:
                record, diagnostics = parse_output(repair_response.text)
                diagnostics = ["repaired after unparseable first reply"] + diagnostics
            except UnparseableOutputError as exc:
                record = SynthesisRecord()
                diagnostics = [f"unparseable output after repair round: {exc}"]
                unparseable = True
        return ExtractionResult(
            paragraph_id=paragraph_id,
            record=record,
            mode=config.mode,
            k=config.k,
            algo=config.algo if config.mode == "few" else "none",
            shot_ids=tuple(s.demo_id for s in scored),
            raw_text=raw_text,
            prompt_fingerprint=fingerprint(request),
            diagnostics=tuple(diagnostics),
            unparseable=unparseable,
        )

    def extract_many(
        self, items: Sequence[tuple[str, str]], config: ExtractionConfig
    ) -> list[ExtractionResult]:
        """items: (paragraph_id, text) pairs; results in input order."""
        return [self.extract(text, pid, config) for pid, text in items]
