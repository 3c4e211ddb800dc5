"""Prompt assembly: task description, condition definitions and constraints,
ordered few-shot demonstrations, output schema, and the query paragraph.

Assembly is a pure function of its inputs; identical inputs produce
byte-identical prompts. Completions (in shots and in the requested output)
are a single JSON object naming all ten condition slots, with absent
conditions as explicit nulls.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum

from .records import SLOTS, SynthesisRecord
from .retrieval import Demonstration

CONDITION_GROUPS = ("metal_precursor", "organic_linker", "solvent", "modulator", "reaction_process")

CONSTRAINT_KINDS = ("numerical", "textual", "structural")


class PromptError(Exception):
    pass


@dataclass(frozen=True)
class Constraint:
    group: str
    kind: str
    text: str

    def __post_init__(self) -> None:
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"constraint kind must be one of {CONSTRAINT_KINDS}")
        if self.group not in CONDITION_GROUPS:
            raise ValueError(f"unknown condition group {self.group!r}")
        # Constraints state rules, never worked examples (those overfit the model).
        lowered = self.text.lower()
        if "e.g." in lowered or "for example" in lowered:
            raise ValueError("constraint text must not contain worked examples")


@dataclass(frozen=True)
class PromptTemplate:
    task_description: str
    condition_definitions: dict[str, str]  # group -> definition text
    constraints: tuple[Constraint, ...]
    schema_instructions: str
    include_definitions: bool = True
    include_constraints: bool = True

    def __post_init__(self) -> None:
        missing = set(CONDITION_GROUPS) - set(self.condition_definitions)
        if missing:
            raise ValueError(f"definitions must cover all condition groups; missing {sorted(missing)}")

    def without_knowledge(self) -> "PromptTemplate":
        """Ablation mode: background definitions and constraints disabled."""
        return PromptTemplate(
            task_description=self.task_description,
            condition_definitions=self.condition_definitions,
            constraints=self.constraints,
            schema_instructions=self.schema_instructions,
            include_definitions=False,
            include_constraints=False,
        )


class OrderingStrategy(str, Enum):
    SIMILARITY_DESCENDING = "similarity_descending"
    SIMILARITY_ASCENDING = "similarity_ascending"
    RANDOM = "random"
    POOL_ORDER = "pool_order"


@dataclass(frozen=True)
class ShotOrdering:
    strategy: OrderingStrategy
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.strategy is OrderingStrategy.RANDOM and self.seed is None:
            raise ValueError("random ordering requires an explicit seed")


#: Most similar shot ends up adjacent to the query paragraph.
DEFAULT_ORDERING = ShotOrdering(OrderingStrategy.SIMILARITY_ASCENDING)


@dataclass(frozen=True)
class AssembledPrompt:
    system_text: str
    user_text: str
    shot_count: int
    token_estimate: int


def record_to_completion(record: SynthesisRecord) -> str:
    """Serialize a record as the canonical completion object (explicit nulls)."""
    return json.dumps(record.to_dict(), ensure_ascii=False)


def order_shots(
    shots: list[Demonstration], ordering: ShotOrdering, pool_ids: list[str] | None = None
) -> list[Demonstration]:
    """Permute ranked shots (most similar first on input) per the strategy."""
    if ordering.strategy is OrderingStrategy.SIMILARITY_DESCENDING:
        return list(shots)
    if ordering.strategy is OrderingStrategy.SIMILARITY_ASCENDING:
        return list(reversed(shots))
    if ordering.strategy is OrderingStrategy.RANDOM:
        permuted = list(shots)
        random.Random(ordering.seed).shuffle(permuted)
        return permuted
    if ordering.strategy is OrderingStrategy.POOL_ORDER:
        if pool_ids is None:
            raise PromptError("pool_order requires the pool id order")
        position = {demo_id: i for i, demo_id in enumerate(pool_ids)}
        return sorted(shots, key=lambda d: position[d.id])
    raise PromptError(f"unknown ordering strategy {ordering.strategy}")


def estimate_tokens(text: str) -> int:
    """Deterministic 4-chars-per-token heuristic; monotone in text length."""
    return math.ceil(len(text) / 4)


def _schema_block() -> str:
    lines = ["Return a single JSON object with exactly these fields:"]
    for slot in SLOTS:
        lines.append(f"- {slot}")
    lines.append("Use null for any condition not stated in the paragraph. Return only the JSON object.")
    return "\n".join(lines)


def assemble(
    template: PromptTemplate,
    shots: list[Demonstration],
    ordering: ShotOrdering,
    query_paragraph: str,
    pool_ids: list[str] | None = None,
) -> AssembledPrompt:
    """Build the full prompt: background + ordered shots + query + schema.

    ``shots`` arrive ranked most-similar-first (retrieval order); the ordering
    strategy decides their position in the prompt.
    """
    for shot in shots:
        if shot.gold is None:
            raise PromptError(f"shot {shot.id} is missing its gold record")

    system_parts = [template.task_description]
    if template.include_definitions:
        defs = ["Condition definitions:"]
        for group in CONDITION_GROUPS:
            defs.append(f"- {group}: {template.condition_definitions[group]}")
        system_parts.append("\n".join(defs))
    if template.include_constraints and template.constraints:
        cons = ["Constraints:"]
        for c in template.constraints:
            cons.append(f"- [{c.kind}] {c.group}: {c.text}")
        system_parts.append("\n".join(cons))
    system_parts.append(template.schema_instructions or _schema_block())
    system_text = "\n\n".join(system_parts)

    user_parts = []
    for i, shot in enumerate(order_shots(shots, ordering, pool_ids), start=1):
        user_parts.append(
            f"### Example {i}\nParagraph:\n{shot.paragraph}\nConditions:\n{record_to_completion(shot.gold)}"
        )
    user_parts.append(f"### Task\nParagraph:\n{query_paragraph}\nConditions:")
    user_text = "\n\n".join(user_parts)

    return AssembledPrompt(
        system_text=system_text,
        user_text=user_text,
        shot_count=len(shots),
        token_estimate=estimate_tokens(system_text) + estimate_tokens(user_text),
    )


# --- shipped default template -------------------------------------------------
# These definition and constraint wordings are project defaults written for
# this codebase; treat them as a starting point and version any edits.

DEFAULT_DEFINITIONS = {
    "metal_precursor": (
        "The precursor compound(s) containing the metal ions that form the framework "
        "nodes, e.g. a metal nitrate hydrate."
    ),
    "organic_linker": (
        "The organic precursor molecule linking metal ions or clusters into the framework."
    ),
    "solvent": "The liquid medium in which the reactants are dissolved.",
    "modulator": (
        "A substance added to adjust reaction conditions (e.g. pH) without becoming part "
        "of the framework."
    ),
    "reaction_process": (
        "The synthesis step that produces the framework, characterized by its duration "
        "and temperature."
    ),
}

DEFAULT_CONSTRAINTS = (
    Constraint(
        "metal_precursor",
        "textual",
        "Only include adjectives that modify the metal precursor itself; drop incidental modifiers.",
    ),
    Constraint(
        "solvent",
        "textual",
        "Report the common solvent name and leave out transient modifiers such as temperature "
        "adjectives; include the word 'solution' only when the solvent is an aqueous solution.",
    ),
    Constraint(
        "modulator",
        "structural",
        "The elements of a modulator do not become part of the backbone of the framework.",
    ),
    Constraint(
        "reaction_process",
        "numerical",
        "Reaction durations last minutes to days; temperatures fall between room temperature and a few hundred degrees Celsius.",
    ),
    Constraint(
        "reaction_process",
        "structural",
        "Crystallization and washing are not the reaction process; report the synthesis reaction itself.",
    ),
)

DEFAULT_TASK_DESCRIPTION = (
    "You extract synthesis conditions from materials-science text. Given a synthesis "
    "paragraph, report the ten conditions exactly as written in the paragraph."
)


def default_template() -> PromptTemplate:
    return PromptTemplate(
        task_description=DEFAULT_TASK_DESCRIPTION,
        condition_definitions=dict(DEFAULT_DEFINITIONS),
        constraints=DEFAULT_CONSTRAINTS,
        schema_instructions=_schema_block(),
    )


# --- template files -------------------------------------------------------------
# Versioned INI-style text files with named sections:
#   [template]   version, task_description, schema_instructions
#   [definitions]  one key per condition group
#   [constraint:N] group, kind, text

TEMPLATE_FILE_VERSION = 1


def save_template(template: PromptTemplate, path) -> None:
    import configparser

    parser = configparser.ConfigParser(interpolation=None)
    parser["template"] = {
        "version": str(TEMPLATE_FILE_VERSION),
        "task_description": template.task_description,
        "schema_instructions": template.schema_instructions,
    }
    parser["definitions"] = dict(template.condition_definitions)
    for i, constraint in enumerate(template.constraints, start=1):
        parser[f"constraint:{i}"] = {
            "group": constraint.group,
            "kind": constraint.kind,
            "text": constraint.text,
        }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# Prompt template (original wordings shipped with this project,\n")
        fh.write("# not transcribed from any external source; edit and re-version).\n")
        parser.write(fh)


def load_template(path) -> PromptTemplate:
    import configparser

    parser = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    version = parser.getint("template", "version")
    if version != TEMPLATE_FILE_VERSION:
        raise PromptError(f"unsupported template file version {version}")
    constraints = []
    for section in parser.sections():
        if section.startswith("constraint:"):
            constraints.append(
                Constraint(
                    group=parser.get(section, "group"),
                    kind=parser.get(section, "kind"),
                    text=parser.get(section, "text"),
                )
            )
    return PromptTemplate(
        task_description=parser.get("template", "task_description"),
        condition_definitions=dict(parser.items("definitions")),
        constraints=tuple(constraints),
        schema_instructions=parser.get("template", "schema_instructions"),
    )
