"""Annotation agreement and the staged human-AI curation workflow.

Two annotators draft independently; per-field Jaccard agreement (threshold
0.8) gates the merge, and a paper passes when at least 80% of its
gold-bearing fields agree. Curation then moves strictly forward:
PreExtracted -> HumanAnnotated -> FewShotChecked -> Finalized, with a
few-shot AI re-extraction diffed against the human record before experts
reconcile field by field. Finalized records become pool demonstrations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .records import SLOTS, SynthesisRecord
from .textutil import collapse_ws, normalize_for_match

FIELD_VALIDITY_THRESHOLD = 0.8
PAPER_VALIDITY_THRESHOLD = 0.8


class CurationError(Exception):
    pass


class CurationState(str, Enum):
    PRE_EXTRACTED = "PreExtracted"
    HUMAN_ANNOTATED = "HumanAnnotated"
    FEW_SHOT_CHECKED = "FewShotChecked"
    FINALIZED = "Finalized"


#: Forward-only transitions and the action that performs each.
TRANSITIONS = {
    ("PreExtracted", "human_pass"): "HumanAnnotated",
    ("HumanAnnotated", "fewshot_check"): "FewShotChecked",
    ("FewShotChecked", "finalize"): "Finalized",
}


def jaccard(a: set[str], b: set[str]) -> float:
    """|a n b| / |a u b|; two empty sets agree perfectly (1.0)."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def field_tokens(value: str | None) -> set[str]:
    """Whitespace tokens of the normalized field value; absence is the empty set."""
    if value is None:
        return set()
    return set(normalize_for_match(value).split())


@dataclass(frozen=True)
class AgreementResult:
    field_jaccard: dict[str, float]
    field_valid: dict[str, bool]
    gold_bearing_fields: tuple[str, ...]  # fields where >= 1 annotator entered a value
    overlap_rate: float | None  # share of gold-bearing fields that are valid
    paper_valid: bool
    invalid_fields: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "field_jaccard": self.field_jaccard,
            "field_valid": self.field_valid,
            "gold_bearing_fields": list(self.gold_bearing_fields),
            "overlap_rate": self.overlap_rate,
            "paper_valid": self.paper_valid,
            "invalid_fields": list(self.invalid_fields),
            "overlap_rate_note": "computed over fields where at least one annotator entered a value",
        }


def merge_field_values(a: str | None, b: str | None) -> str | None:
    """Union of the two annotators' values, as a token-union string.

    Symmetric: the base value is the one with more tokens (ties break to the
    lexicographically smaller string); the other value's tokens append in
    their original order when their casefolded form is new. Original casing
    survives (gold records keep "H2O", not "h2o").
    """
    if a is None:
        return b
    if b is None:
        return a
    base, other = sorted((a, b), key=lambda v: (-len(v.split()), v))
    base_tokens = collapse_ws(base).split()
    seen = {t.casefold() for t in base_tokens}
    extras = [t for t in collapse_ws(other).split() if t.casefold() not in seen]
    return " ".join(base_tokens + extras)


def agreement_merge(
    draft_a: SynthesisRecord, draft_b: SynthesisRecord
) -> tuple[AgreementResult, SynthesisRecord]:
    """Check inter-annotator consistency and merge agreeing fields.

    Valid fields merge as the union of the annotators' values; invalid fields
    come back absent and flagged for curation. The paper verdict applies the
    80% rule over gold-bearing fields.
    """
    field_jaccard: dict[str, float] = {}
    field_valid: dict[str, bool] = {}
    gold_bearing: list[str] = []
    merged: dict[str, str | None] = {}
    invalid: list[str] = []

    for slot in SLOTS:
        va, vb = draft_a.get(slot), draft_b.get(slot)
        score = jaccard(field_tokens(va), field_tokens(vb))
        valid = score >= FIELD_VALIDITY_THRESHOLD
        field_jaccard[slot] = score
        field_valid[slot] = valid
        if va is not None or vb is not None:
            gold_bearing.append(slot)
        if valid:
            merged[slot] = merge_field_values(va, vb)
        else:
            merged[slot] = None
            invalid.append(slot)

    if gold_bearing:
        overlap = sum(1 for slot in gold_bearing if field_valid[slot]) / len(gold_bearing)
        paper_valid = overlap >= PAPER_VALIDITY_THRESHOLD
    else:
        overlap = None
        paper_valid = False  # nothing annotated: nothing to accept

    result = AgreementResult(
        field_jaccard=field_jaccard,
        field_valid=field_valid,
        gold_bearing_fields=tuple(gold_bearing),
        overlap_rate=overlap,
        paper_valid=paper_valid,
        invalid_fields=tuple(invalid),
    )
    return result, SynthesisRecord(**merged)


def diff_records(human: SynthesisRecord, ai: SynthesisRecord) -> list[dict]:
    """Fields where the human and few-shot AI values disagree after normalization."""
    rows = []
    for slot in SLOTS:
        hv, av = human.get(slot), ai.get(slot)
        hn = normalize_for_match(hv) if hv is not None else None
        an = normalize_for_match(av) if av is not None else None
        if hn != an:
            rows.append({"field": slot, "human": hv, "ai": av})
    return rows


def apply_verdicts(
    human: SynthesisRecord,
    ai: SynthesisRecord,
    verdicts: dict[str, dict],
) -> SynthesisRecord:
    """Reconcile disagreements into the final record.

    Every disagreeing field needs a verdict: accept-human, accept-ai, or
    edit (with an explicit value, possibly null).
    """
    disagreements = {row["field"] for row in diff_records(human, ai)}
    missing = disagreements - set(verdicts)
    if missing:
        raise CurationError(f"missing verdicts for disagreeing fields: {sorted(missing)}")
    unknown = set(verdicts) - set(SLOTS)
    if unknown:
        raise CurationError(f"verdicts name unknown fields: {sorted(unknown)}")

    final: dict[str, str | None] = human.to_dict()
    for slot, verdict in verdicts.items():
        choice = verdict.get("choice")
        if choice == "accept-human":
            final[slot] = human.get(slot)
        elif choice == "accept-ai":
            final[slot] = ai.get(slot)
        elif choice == "edit":
            if "value" not in verdict:
                raise CurationError(f"edit verdict for {slot} requires a value")
            value = verdict["value"]
            final[slot] = value if value else None
        else:
            raise CurationError(f"unknown verdict choice {choice!r} for {slot}")
    return SynthesisRecord(**final)


@dataclass
class AnnotationTask:
    """Server-side task state; exactly two annotators per task."""

    task_id: str
    paragraph_id: str
    paragraph_text: str
    annotators: tuple[str, str]
    state: str = CurationState.PRE_EXTRACTED.value
    ai_preannotation: dict | None = None  # zero-shot record
    drafts: dict[str, dict] = field(default_factory=dict)  # annotator -> record dict
    agreement: dict | None = None
    human_record: dict | None = None
    fewshot_record: dict | None = None
    fewshot_diff: list[dict] = field(default_factory=list)
    fewshot_diagnostics: list[str] = field(default_factory=list)
    final_record: dict | None = None
    exclusion: dict | None = None  # curator verdict: {"reason_code": ..., "note": ...}

    def __post_init__(self) -> None:
        if len(self.annotators) != 2 or self.annotators[0] == self.annotators[1]:
            raise CurationError("a task needs exactly two distinct annotators")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "paragraph_id": self.paragraph_id,
            "paragraph_text": self.paragraph_text,
            "annotators": list(self.annotators),
            "state": self.state,
            "ai_preannotation": self.ai_preannotation,
            "drafts": self.drafts,
            "agreement": self.agreement,
            "human_record": self.human_record,
            "fewshot_record": self.fewshot_record,
            "fewshot_diff": self.fewshot_diff,
            "fewshot_diagnostics": self.fewshot_diagnostics,
            "final_record": self.final_record,
            "exclusion": self.exclusion,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationTask":
        return cls(
            task_id=data["task_id"],
            paragraph_id=data["paragraph_id"],
            paragraph_text=data["paragraph_text"],
            annotators=tuple(data["annotators"]),
            state=data["state"],
            ai_preannotation=data.get("ai_preannotation"),
            drafts=data.get("drafts", {}),
            agreement=data.get("agreement"),
            human_record=data.get("human_record"),
            fewshot_record=data.get("fewshot_record"),
            fewshot_diff=data.get("fewshot_diff", []),
            fewshot_diagnostics=data.get("fewshot_diagnostics", []),
            final_record=data.get("final_record"),
            exclusion=data.get("exclusion"),
        )


def check_transition(state: str, action: str) -> str:
    """Next state for (state, action); anything else is an illegal transition."""
    key = (state, action)
    if key not in TRANSITIONS:
        raise CurationError(f"illegal transition: action {action!r} in state {state!r}")
    return TRANSITIONS[key]

#: Curator exclusion reason codes (expert judgment, never automated).
EXCLUSION_REASONS = ("chiral_duplicate", "multi_mof_paragraph", "other")
